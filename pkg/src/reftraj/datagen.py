"""Synthetic reference sets.

References are a base coefficient vector plus Gaussian noise projected onto
``ker A``, so every reference meets the endpoint conditions exactly. Two
ready-made scenarios are provided: a force-field crossing of the unit square
and a climb-like problem with a synthetic fuel-flow model.
"""

from dataclasses import dataclass

import numpy as np

from .basis import build_basis, gauss_legendre_rule
from .cost import ForceFieldSpec, QuadraticInstantaneousCost
from .exceptions import GenerationStarvedError, InvalidArgumentError
from .refstats import ReferenceSet, kernel_projector
from .trajectory import CoefficientVector, EndpointConditions, TrajectorySamples, endpoint_system


def generate_references(base_c, system, noise_scale, count, box=None, seed=0,
                        decay=None, accept=None, grid_size=201, max_attempts=None):
    """Draw ``count`` references around ``base_c`` that keep the endpoints.

    Parameters
    ----------
    base_c : CoefficientVector
    system : EndpointSystem
        Noise is projected onto the kernel of ``system.A``.
    noise_scale : float or ndarray
        Standard deviation of the coefficient noise before projection, scalar
        or one entry per coefficient.
    box : (lower, upper), optional
        Per-dimension bounds checked on a uniform grid; NaN/inf disables a side.
    decay : float, optional
        Anisotropic profile, the noise on the ``k``-th coefficient of each
        dimension is scaled by ``decay ** (k - 1)``.
    accept : callable, optional
        Extra filter ``TrajectorySamples -> bool``.

    Returns
    -------
    refs : ReferenceSet
    acceptance_rate : float
    """
    spec = base_c.basis
    c0 = base_c.entries
    if np.abs(system.residual(c0)).max(initial=0.0) > 1e-10 * max(1.0, np.abs(system.gamma).max(initial=0.0)):
        raise InvalidArgumentError("base trajectory does not satisfy the endpoint system")
    noise_scale = np.broadcast_to(np.asarray(noise_scale, dtype=float), c0.shape)
    if np.any(noise_scale < 0) or count < 1:
        raise InvalidArgumentError("noise_scale must be >= 0 and count >= 1")
    rng = np.random.default_rng(seed)
    P = kernel_projector(system.A)
    profile = np.ones(spec.K)
    if decay is not None:
        profile = np.concatenate([decay ** np.arange(Kd) for Kd in spec.dims])
    grid = np.linspace(0.0, spec.T, grid_size)
    phi = spec.values(grid)
    lower = upper = None
    if box is not None:
        lower = np.nan_to_num(np.asarray(box[0], dtype=float), nan=-np.inf)
        upper = np.nan_to_num(np.asarray(box[1], dtype=float), nan=np.inf)
    max_attempts = 100 * count if max_attempts is None else max_attempts
    accepted, attempts = [], 0
    while len(accepted) < count:
        if attempts >= max_attempts:
            rate = len(accepted) / attempts
            raise GenerationStarvedError(
                f"accepted {len(accepted)} of {attempts} draws "
                f"(rate {rate:.3f}), needed {count}", rate)
        attempts += 1
        c = c0 + P @ (noise_scale * profile * rng.standard_normal(spec.K))
        y = np.column_stack([phi[:, :Kd] @ c[spec.block(d)] for d, Kd in enumerate(spec.dims)])
        if lower is not None and (np.any(y < lower) or np.any(y > upper)):
            continue
        if accept is not None and not accept(TrajectorySamples(grid, y)):
            continue
        accepted.append(c)
    refs = ReferenceSet(np.array(accepted))
    return refs, len(accepted) / attempts


# ------------------------------------------------------------------ scenarios

@dataclass(frozen=True)
class Scenario:
    """A synthetic problem: references, cost, endpoints and run settings."""

    name: str
    basis: object
    conditions: EndpointConditions
    base: CoefficientVector
    references: ReferenceSet
    cost: object
    names: tuple
    settings: dict
    acceptance_rate: float


FORCEFIELD_Y0 = (0.111, 0.926)
FORCEFIELD_YT = (0.912, 0.211)


def _exact_coefficients(spec, polys):
    """Coefficients of polynomial components given in powers of ``s = t / T``."""
    rule = gauss_legendre_rule(spec.K_max + 2, spec.T)
    phi = spec.values(rule.nodes)
    s = rule.nodes / spec.T
    parts = []
    for d, Kd in enumerate(spec.dims):
        vals = np.polynomial.polynomial.polyval(s, polys[d])
        parts.append(phi[:, :Kd].T @ (rule.weights * vals))
    return CoefficientVector(np.concatenate(parts), spec)


def forcefield_scenario(alpha=0.0, seed=0, count=122, noise_scale=0.05, decay=0.7):
    """Crossing of the unit square in the field ``V(x) = (0, x1)``.

    The base path leaves ``(0.111, 0.926)`` moving down faster than right and
    reaches ``(0.912, 0.211)``; it is a reasonable but not optimal route.
    """
    spec = build_basis("legendre", (4, 6), 1.0)
    y0, yT = np.array(FORCEFIELD_Y0), np.array(FORCEFIELD_YT)
    dy = yT - y0
    # s1 = (s + s^2) / 2, s2 = (3 s - s^2) / 2, both monotone from 0 to 1
    polys = [
        [y0[0], 0.5 * dy[0], 0.5 * dy[0]],
        [y0[1], 1.5 * dy[1], -0.5 * dy[1]],
    ]
    base = _exact_coefficients(spec, polys)
    cond = EndpointConditions(y0, yT, 1e-4)
    system = endpoint_system(spec, cond)
    refs, rate = generate_references(
        base, system, noise_scale, count, box=([0.0, 0.0], [1.0, 1.0]),
        seed=seed, decay=decay,
    )
    field = ForceFieldSpec(M=[[0.0, 0.0], [1.0, 0.0]], b=[0.0, 0.0], alpha=alpha)
    settings = {
        "n_best": 10, "nu_max": 1.0e3, "box": ([0.0, 0.0], [1.0, 1.0]),
        "noise_scale": noise_scale, "decay": decay, "count": count, "seed": seed,
    }
    return Scenario("forcefield", spec, cond, base, refs, field, ("x1", "x2"),
                    settings, rate)


def _centered_quadratic(center, slope, curvature, base):
    """``base + slope . (x - x0) + sum_d curvature_d (x_d - x0_d)^2`` as Q, w, r."""
    x0 = np.asarray(center, dtype=float)
    g = np.asarray(slope, dtype=float)
    h = np.asarray(curvature, dtype=float)
    Q = np.diag(h)
    w = g - 2.0 * h * x0
    r = base - g @ x0 + h @ (x0 * x0)
    return QuadraticInstantaneousCost(Q, w, r)


# Synthetic fuel-flow model in kg/s over (altitude [ft], Mach, N1 [%]). The
# coefficients are made up so that the flow is positive over CLIMB_BOX, drops
# with altitude and grows with N1; they are not fitted to any aircraft.
CLIMB_FUEL_FLOW = _centered_quadratic(
    center=[20000.0, 0.6, 90.0],
    slope=[-2.0e-5, 0.3, 0.04],
    curvature=[1.0e-10, 0.5, 5.0e-4],
    base=1.3,
)

CLIMB_BOX = (np.array([0.0, 0.2, 60.0]), np.array([45000.0, 0.9, 105.0]))
CLIMB_THRUST_BAND = (85.0, 100.0)  # N1 (%) kept during a climb
CLIMB_MMO = 0.82
CLIMB_MAX_RATE = 3600.0 / 60.0  # ft/s


def climb_scenario(seed=0, count=48, noise_scale=None, T=1200.0):
    """Climb from 3000 ft / Mach 0.30 to 38000 ft / Mach 0.78.

    Variables are altitude (ft), Mach number and N1 (%). N1 endpoints are
    free. References are filtered so that they respect the Mach and
    rate-of-climb limits.
    """
    spec = build_basis("legendre", (4, 10, 6), T)
    y0 = np.array([3000.0, 0.30, np.nan])
    yT = np.array([38000.0, 0.78, np.nan])
    cond = EndpointConditions(y0, yT, [100.0, 0.01, 0.0])
    dh = yT[0] - y0[0]
    dm = yT[1] - y0[1]
    # altitude: concave climb, h(s) = h0 + dh (1.6 s - 0.6 s^2)
    # Mach: quick acceleration then slow drift, N1: slowly decaying thrust
    polys = [
        [y0[0], 1.6 * dh, -0.6 * dh],
        [y0[1], 2.0 * dm, -1.0 * dm],
        [92.0, -4.0, -2.0],
    ]
    base = _exact_coefficients(spec, polys)
    system = endpoint_system(spec, EndpointConditions(y0, yT))
    scale = np.concatenate([
        np.full(4, 400.0), np.full(10, 0.004), np.full(6, 1.0),
    ]) if noise_scale is None else noise_scale

    def admissible(s):
        rates = np.diff(s.values[:, 0]) / np.diff(s.times)
        return bool(s.values[:, 1].max() <= CLIMB_MMO and rates.max() <= CLIMB_MAX_RATE)

    refs, rate = generate_references(base, system, scale, count, seed=seed,
                                     accept=admissible)
    settings = {
        "n_best": 5, "nu_max": 1.0e3, "mmo": CLIMB_MMO, "max_rate": CLIMB_MAX_RATE,
        "rank_rtol": 1e-13,
        "count": count, "seed": seed,
    }
    return Scenario("climb", spec, cond, base, refs, CLIMB_FUEL_FLOW,
                    ("altitude", "mach", "n1"), settings, rate)

