"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line with its measured figures; the
lines are printed at the end of a pytest session (see ``conftest.py``) and
when this file is run as a script.
"""

import time

import numpy as np
import pytest

from reftraj.basis import build_basis
from reftraj.cli import main as cli_main
from reftraj.cost import (
    ForceFieldSpec,
    QuadraticInstantaneousCost,
    assemble_forcefield,
    assemble_quadratic,
    eval_cost_quadrature,
)
from reftraj.datagen import CLIMB_MAX_RATE, CLIMB_MMO, climb_scenario, forcefield_scenario
from reftraj.estimator import ReferenceTrajectoryOptimizer
from reftraj.optimizer import build_map_problem, solve_reduced, weyl_certificate
from reftraj.refstats import ReferenceSet, decompose, kernel_projector
from reftraj.trajectory import (
    CoefficientVector,
    EndpointConditions,
    derivative_upper_bound,
    endpoint_system,
    lower_bound,
    project,
    rate_of_climb,
    reconstruct,
    upper_bound,
)
from reftraj.uncertainty import CostNoiseModel, confidence_interval, simulate_coverage

from conftest import random_exact_instance

pytestmark = pytest.mark.acceptance

RESULTS = []


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


# ----------------------------------------------------------------- 1

def test_criterion_01_closed_form_matches_quadrature():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_q = worst_f = 0.0
    for _ in range(100):
        D = int(rng.integers(1, 4))
        spec = build_basis("legendre", rng.integers(1, 9, D), float(rng.choice([1.0, 50.0])))
        B = rng.standard_normal((D, D))
        f = QuadraticInstantaneousCost(0.5 * (B + B.T), rng.standard_normal(D), rng.standard_normal())
        c = rng.standard_normal(spec.K)
        F = assemble_quadratic(f, spec)(c)
        worst_q = max(worst_q, abs(F - eval_cost_quadrature(f, c, spec)) / (1 + abs(F)))
    for alpha in (0.0, 0.35, 1.0, 10.0):
        for _ in range(100):
            D = int(rng.integers(1, 4))
            spec = build_basis("legendre", rng.integers(1, 9, D), float(rng.choice([1.0, 50.0])))
            field = ForceFieldSpec(rng.standard_normal((D, D)), rng.standard_normal(D), alpha)
            c = rng.standard_normal(spec.K)
            F = assemble_forcefield(field, spec)(c)
            worst_f = max(worst_f, abs(F - eval_cost_quadrature(field, c, spec)) / (1 + abs(F)))
    elapsed = time.perf_counter() - start
    ok = worst_q <= 1e-9 and worst_f <= 1e-9 and elapsed < 5.0
    record(1, "closed-form cost vs quadrature", ok,
           f"quadratic {worst_q:.1e}, force-field {worst_f:.1e}, {elapsed:.2f}s")


# ----------------------------------------------------------------- 2

def test_criterion_02_decomposition_fidelity():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    errs = np.zeros(4)
    for _ in range(50):
        K = int(rng.integers(4, 21))
        m = int(rng.integers(1, min(6, K - 2) + 1))
        A = rng.standard_normal((m, K))
        gamma = rng.standard_normal(m)
        r = int(rng.integers(1, K - m + 1))
        B = kernel_projector(A) @ rng.standard_normal((K, r))
        S = B @ B.T
        base = np.linalg.lstsq(A, gamma, rcond=None)[0]
        refs = base + rng.standard_normal((6, r)) @ B.T
        dec = decompose(S, (A, gamma), refs)
        V = dec.V
        lam_S = np.zeros(K)
        lam_S[:dec.sigma] = dec.eigenvalues
        lam_A = np.zeros(K)
        lam_A[K - dec.a:] = dec.singular_values ** 2
        errs[0] = max(errs[0], np.linalg.norm((V * lam_S) @ V.T - S))
        errs[1] = max(errs[1], np.linalg.norm((V * lam_A) @ V.T - A.T @ A))
        errs[2] = max(errs[2], np.linalg.norm(V.T @ V - np.eye(K)))
        w = rng.uniform(0.1, 1.0, 6)
        best = ReferenceSet(refs, weights=w / w.sum())
        Sp = dec.covariance_pinv()
        R = dec.reduce(refs)
        for _ in range(5):
            x = rng.standard_normal(dec.sigma)
            c = dec.lift(x)
            d = c - refs
            full = best.weights @ np.einsum("ik,kl,il->i", d, Sp, d)
            red = best.weights @ np.sum((x - R) ** 2 / dec.eigenvalues, axis=1)
            errs[3] = max(errs[3], abs(full - red) / max(1.0, abs(full)))
    elapsed = time.perf_counter() - start
    ok = errs[0] <= 1e-8 and errs[1] <= 1e-8 and errs[2] <= 1e-10 and errs[3] <= 1e-8 and elapsed < 5
    record(2, "simultaneous diagonalization and penalty identity", ok,
           f"cov {errs[0]:.1e}, AtA {errs[1]:.1e}, orth {errs[2]:.1e}, "
           f"penalty {errs[3]:.1e}, {elapsed:.2f}s")


# ----------------------------------------------------------------- 3

def test_criterion_03_zero_nu_gives_weighted_mean():
    rng = np.random.default_rng(3)
    worst_mean = worst_end = 0.0
    for _ in range(20):
        inst = random_exact_instance(rng, dims=tuple(rng.integers(2, 8, 3)), T=float(rng.uniform(1, 50)),
                                     I=20, n_best=6)
        sol = solve_reduced(build_map_problem(inst["reduced"], inst["dec"], inst["best"], nu=0.0))
        mean = inst["best"].weights @ inst["dec"].reduce(inst["best"].coefficients)
        worst_mean = max(worst_mean, np.abs(sol.c1 - mean).max())
        worst_end = max(worst_end, np.abs(inst["system"].residual(sol.c)).max())
    ok = worst_mean <= 1e-10 and worst_end <= 1e-8
    record(3, "nu = 0 returns the weighted reference mean", ok,
           f"mean error {worst_mean:.1e}, endpoint residual {worst_end:.1e}")


# ----------------------------------------------------------------- 4

def test_criterion_04_regularization_path():
    rng = np.random.default_rng(4)
    inst = random_exact_instance(rng, dims=(5, 7), T=2.0, I=20, n_best=5)
    weyl = weyl_certificate(inst["reduced"].Q, inst["dec"].eigenvalues, kappa=1e-3)
    costs, pens = [], []
    for nu in np.geomspace(1e-2, 1e3, 10):
        sol = solve_reduced(build_map_problem(inst["reduced"], inst["dec"], inst["best"], nu=nu))
        costs.append(sol.cost)
        pens.append(sol.penalty)
    dc, dp = np.diff(costs), np.diff(pens)
    ok = weyl.certified and np.all(dc <= 1e-9) and np.all(dp >= -1e-9)
    record(4, "cost nonincreasing and penalty nondecreasing in nu", ok,
           f"max cost step {dc.max():.1e}, min penalty step {dp.min():.1e}, "
           f"certified={weyl.certified}")


# ----------------------------------------------------------------- 5

def test_criterion_05_weyl_certificate():
    rng = np.random.default_rng(5)
    worst = np.inf
    for _ in range(50):
        n = int(rng.integers(2, 21))
        B = rng.standard_normal((n, n))
        Q = 0.5 * (B + B.T)
        if np.linalg.eigvalsh(Q).min() >= 0:
            Q -= 2 * abs(np.linalg.eigvalsh(Q).min()) * np.eye(n) + np.eye(n)
        lam = np.sort(rng.uniform(0.01, 5.0, n))[::-1]
        rep = weyl_certificate(Q, lam)
        worst = min(worst, np.linalg.eigvalsh(Q + rep.kappa_min * np.diag(1 / lam)).min())
    ok = worst >= -1e-8
    record(5, "Weyl bound gives a convex objective", ok, f"min eigenvalue {worst:.2e}")


# ----------------------------------------------------------------- 6

def _work_and_kinetic(spec):
    W = assemble_forcefield(ForceFieldSpec([[0, 0], [1, 0]], [0, 0], 0.0), spec)
    J = assemble_forcefield(ForceFieldSpec(np.zeros((2, 2)), np.zeros(2), 1.0), spec)
    return (lambda c: -W(c)), J


def test_criterion_06_forcefield_application():
    start = time.perf_counter()
    box = [lower_bound(0, 0.0), upper_bound(0, 1.0), lower_bound(1, 0.0), upper_bound(1, 1.0)]
    gains, Js = [], []
    for alpha in (0.0, 0.35, 1.0, 10.0):
        sc = forcefield_scenario(alpha=alpha, seed=0)
        est = ReferenceTrajectoryOptimizer(
            dims=sc.basis.dims, T=sc.basis.T, endpoints=sc.conditions, cost=sc.cost,
            constraints=box, nu_max=sc.settings["nu_max"], n_best=sc.settings["n_best"],
        ).fit(sc.references.coefficients)
        work, kinetic = _work_and_kinetic(sc.basis)
        W_ref = work(sc.references.coefficients)
        gains.append(float(np.mean(100 * (work(est.coef_) - W_ref) / np.abs(W_ref))))
        Js.append(float(kinetic(est.coef_)))
    dy = np.subtract(sc.conditions.yT, sc.conditions.y0)
    J_min = float(dy @ dy) / sc.basis.T
    elapsed = time.perf_counter() - start
    ok = (all(a > b for a, b in zip(gains, gains[1:])) and gains[0] > 0 and gains[1] > 0
          and abs(Js[3] - J_min) <= 0.05 * J_min and Js[0] >= 1.10 * J_min and elapsed < 10)
    record(6, "force-field work gains ordering", ok,
           "gains " + " > ".join(f"{g:.2f}" for g in gains)
           + f", J(10)/Jmin {Js[3] / J_min:.4f}, J(0)/Jmin {Js[0] / J_min:.3f}, {elapsed:.2f}s")


# ----------------------------------------------------------------- 7

def test_criterion_07_climb_substitute():
    start = time.perf_counter()
    sc = climb_scenario(seed=0)
    cons = [upper_bound(1, CLIMB_MMO, "mmo"), derivative_upper_bound(0, CLIMB_MAX_RATE, 3, "rate")]
    est = ReferenceTrajectoryOptimizer(
        dims=sc.basis.dims, T=sc.basis.T, endpoints=sc.conditions, cost=sc.cost, constraints=cons,
        nu_max=sc.settings["nu_max"], n_best=sc.settings["n_best"],
        rank_rtol=sc.settings["rank_rtol"],
    ).fit(sc.references.coefficients)
    grid = reconstruct(est.coefficient_vector_, np.linspace(0, sc.basis.T, 200))
    h, M = grid.values[:, 0], grid.values[:, 1]
    max_rate = rate_of_climb(grid, 0).max()
    ends_ok = (abs(h[0] - 3000) <= 100 and abs(h[-1] - 38000) <= 100
               and abs(M[0] - 0.30) <= 0.01 and abs(M[-1] - 0.78) <= 0.01)
    best_ref = est.reference_costs_.min()
    elapsed = time.perf_counter() - start
    ok = (M.max() <= CLIMB_MMO and max_rate <= CLIMB_MAX_RATE and ends_ok
          and est.cost_ < best_ref and elapsed < 10)
    record(7, "synthetic climb admissible and cheaper than every reference", ok,
           f"max Mach {M.max():.4f}, max rate {max_rate * 60:.0f} ft/min, cost {est.cost_:.2f} "
           f"vs best reference {best_ref:.2f} ({100 * (1 - est.cost_ / best_ref):.1f}% lower), "
           f"nu {est.nu_:.4g}, {elapsed:.2f}s")


# ----------------------------------------------------------------- 8

def test_criterion_08_interval_coverage():
    start = time.perf_counter()
    noise = CostNoiseModel(0.8, 25.0)
    cov = simulate_coverage(100.0, noise, 0.95, n_rep=50_000, seed=8)
    w1 = np.diff(confidence_interval(0.0, noise))[0]
    w2 = np.diff(confidence_interval(0.0, CostNoiseModel(0.8, 100.0)))[0]
    elapsed = time.perf_counter() - start
    ok = 0.94 <= cov <= 0.96 and abs(w2 / w1 - 2.0) <= 1e-12 and elapsed < 10
    record(8, "95% interval coverage and sqrt(T) width", ok,
           f"coverage {cov:.4f}, width ratio for 4T {w2 / w1:.12f}, {elapsed:.2f}s")


# ----------------------------------------------------------------- 9

def test_criterion_09_projection_round_trip():
    rng = np.random.default_rng(9)
    worst = 0.0
    equiv_ok = True
    for _ in range(100):
        D = int(rng.integers(1, 4))
        T = float(rng.choice([1.0, 50.0]))
        spec = build_basis("legendre", rng.integers(1, 9, D), T)
        c = rng.standard_normal(spec.K)
        s = reconstruct(CoefficientVector(c, spec), np.linspace(0, T, 20001))
        worst = max(worst, np.abs(project(s, spec).entries - c).max())
        ends = reconstruct(CoefficientVector(c, spec), [0.0, T]).values
        good = endpoint_system(spec, EndpointConditions(ends[0], ends[1]))
        moved = ends[1] + rng.choice([-1, 1], D) * 1e-6
        bad = endpoint_system(spec, EndpointConditions(ends[0], moved))
        equiv_ok &= good.is_satisfied(c, 1e-10) and not bad.is_satisfied(c, 1e-10)
        # reverse direction: any solution of the system meets the endpoints
        sol = np.linalg.lstsq(good.A, good.gamma, rcond=None)[0] if spec.K >= 2 * D else c
        got = reconstruct(CoefficientVector(sol, spec), [0.0, T]).values
        equiv_ok &= bool(np.abs(got - ends).max() <= 1e-8)
    ok = worst <= 1e-6 and equiv_ok
    record(9, "projection round trip and endpoint equivalence", ok,
           f"max coefficient error {worst:.1e}, equivalence {equiv_ok}")


# ---------------------------------------------------------------- 10

def test_criterion_10_deterministic_runs(tmp_path):
    assert cli_main(["generate", "--scenario", "climb", "--output", str(tmp_path), "--seed", "4"]) == 0
    cfg = str(tmp_path / "config.yaml")
    summary = tmp_path / "results" / "summary.json"
    assert cli_main(["optimize", "--config", cfg]) == 0
    first = summary.read_bytes()
    assert cli_main(["optimize", "--config", cfg]) == 0
    second = summary.read_bytes()
    ok = first == second
    record(10, "repeated optimize runs give identical summaries", ok,
           f"{len(first)} bytes, identical={ok}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
