import numpy as np
import pytest

from reftraj.basis import build_basis
from reftraj.cost import QuadraticInstantaneousCost, assemble_quadratic, reduce_cost
from reftraj.datagen import generate_references
from reftraj.refstats import ReferenceSet, decompose, estimate_covariance, project_to_kernel
from reftraj.trajectory import CoefficientVector, EndpointConditions, endpoint_system


def random_spd(rng, n, scale=1.0):
    B = rng.standard_normal((n, n))
    return scale * (B @ B.T / n + 0.1 * np.eye(n))


def random_quadratic(rng, D, psd=True):
    Q = random_spd(rng, D) if psd else rng.standard_normal((D, D))
    Q = 0.5 * (Q + Q.T)
    return QuadraticInstantaneousCost(Q, rng.standard_normal(D), float(rng.standard_normal()))


def random_exact_instance(rng, dims=(3, 4), T=1.0, I=12, n_best=4, psd=True, decay=None):
    """Exact-endpoint instance with references, decomposition and reduced cost."""
    basis = build_basis("legendre", dims, T)
    D = len(dims)
    y0, yT = rng.uniform(-1, 1, D), rng.uniform(-1, 1, D)
    cond = EndpointConditions(y0, yT)
    system = endpoint_system(basis, cond)
    base = np.linalg.lstsq(system.A, system.gamma, rcond=None)[0]
    refs, _ = generate_references(CoefficientVector(base, basis), system, 0.3, I,
                                  seed=int(rng.integers(1 << 31)), decay=decay)
    S = project_to_kernel(estimate_covariance(refs.coefficients).matrix, system.A)
    dec = decompose(S, system, refs.coefficients)
    cost = random_quadratic(rng, D, psd=psd)
    assembled = assemble_quadratic(cost, basis)
    reduced = reduce_cost(assembled, dec)
    w = rng.uniform(0.5, 2.0, n_best)
    best = ReferenceSet(refs.coefficients[:n_best], weights=w / w.sum())
    return {
        "basis": basis, "conditions": cond, "system": system, "refs": refs,
        "best": best, "S": S, "dec": dec, "cost": cost, "assembled": assembled,
        "reduced": reduced,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
