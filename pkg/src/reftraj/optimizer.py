"""Penalized quadratic problem over the free coordinates and its solvers.

In free coordinates ``x = V1^T c`` the objective is::

    nu * (x^T Qr x + wr^T x + rr) + sum_i w_i (x - x_i)^T diag(1/lam) (x - x_i)

``nu = 0`` returns the weighted reference mean; growing ``nu`` trades
closeness to the references for lower cost.
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from .exceptions import (
    DegenerateProblemError,
    InvalidArgumentError,
    NoAdmissibleSolutionError,
    NumericalError,
    UnboundedProblemError,
)

logger = logging.getLogger(__name__)

KKT_TOL = 1e-9
MAX_FACE_ROWS = 12  # 2**12 row subsets at most


@dataclass(frozen=True)
class MapProblem:
    """Objective data in free coordinates plus optional ``L x <= u`` rows."""

    cost: object
    reduced_refs: np.ndarray
    weights: np.ndarray
    eigenvalues: np.ndarray
    decomposition: object
    nu: float = 0.0
    L: np.ndarray = None
    u: np.ndarray = None

    def __post_init__(self):
        if not self.nu >= 0:
            raise InvalidArgumentError(f"nu must be non-negative, got {self.nu}")
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.size == 0:
            raise DegenerateProblemError("no free coordinates to optimize")
        if np.any(lam <= 0):
            raise InvalidArgumentError("covariance eigenvalues must be positive")
        R = np.atleast_2d(np.asarray(self.reduced_refs, dtype=float))
        if R.shape[1] != lam.size:
            raise InvalidArgumentError("reduced references do not match sigma")
        L = np.zeros((0, lam.size)) if self.L is None else np.atleast_2d(self.L)
        u = np.zeros(0) if self.u is None else np.asarray(self.u, dtype=float).ravel()
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "reduced_refs", R)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "u", u)

    @property
    def sigma(self):
        return self.eigenvalues.size

    @property
    def kappa(self):
        return np.inf if self.nu == 0 else 1.0 / self.nu

    @property
    def mean(self):
        return self.weights @ self.reduced_refs

    @property
    def hessian(self):
        """Half the Hessian, ``nu Qr + diag(1/lam)``."""
        return self.nu * self.cost.Q + np.diag(1.0 / self.eigenvalues)

    @property
    def linear(self):
        """Linear term ``b`` so that the objective is ``x^T H x + b^T x + const``."""
        return self.nu * self.cost.w - 2.0 * self.mean / self.eigenvalues

    def penalty(self, x):
        d = np.asarray(x, dtype=float) - self.reduced_refs
        return float(self.weights @ np.sum(d * d / self.eigenvalues, axis=1))

    def objective(self, x):
        return float(self.nu * self.cost(x) + self.penalty(x))

    def gradient(self, x):
        return 2.0 * self.hessian @ x + self.linear

    def with_nu(self, nu):
        return MapProblem(self.cost, self.reduced_refs, self.weights, self.eigenvalues,
                          self.decomposition, nu, self.L, self.u)


def build_map_problem(reduced_cost, decomposition, refs, nu=0.0, bands=None):
    """Assemble the problem for a reference subset.

    Parameters
    ----------
    refs : ReferenceSet
        References entering the penalty (typically the best few).
    bands : EndpointSystem, optional
        Rows ``A c`` that must stay within ``gamma +- tolerance``; they become
        linear inequalities on the free coordinates.
    """
    dec = decomposition
    if dec.sigma == 0:
        raise DegenerateProblemError("covariance has rank 0, no free coordinates")
    if refs.K != dec.K:
        raise InvalidArgumentError("references and decomposition disagree on K")
    R = dec.reduce(refs.coefficients)
    L = u = None
    if bands is not None and bands.A.shape[0]:
        L, u = _band_inequalities(bands, dec)
    return MapProblem(reduced_cost, R, refs.weights, dec.eigenvalues, dec, nu, L, u)


def _band_inequalities(bands, dec):
    """``gamma - tol <= A (V1 x + fixed) <= gamma + tol`` as ``L x <= u``."""
    fixed = dec.V2 @ dec.c2 + dec.V3 @ dec.c3
    AV = bands.A @ dec.V1
    base = bands.A @ fixed
    L = np.vstack([AV, -AV])
    u = np.concatenate([bands.gamma + bands.tolerance - base,
                        -(bands.gamma - bands.tolerance) + base])
    scale = np.abs(bands.A).max(initial=1.0)
    live = np.linalg.norm(L, axis=1) > 1e-12 * scale
    if np.any(u[~live] < -1e-9 * max(1.0, np.abs(bands.gamma).max(initial=0.0))):
        raise NoAdmissibleSolutionError(
            "endpoint bands cannot be met with the pinned coordinates")
    return L[live], u[live]


def lift_solution(c1, decomposition):
    return decomposition.lift(c1)


# ---------------------------------------------------------------- certificate

@dataclass(frozen=True)
class WeylReport:
    """Sufficient convexity bound from Weyl's eigenvalue inequality.

    ``kappa_min = max(0, -rho_min * lambda_1)``; any ``kappa >= kappa_min``
    (equivalently ``nu <= 1 / kappa_min``) makes the objective convex. The
    bound is sufficient, not necessary.
    """

    rho_min: float
    lambda_1: float
    kappa_min: float
    kappa: float
    certified: bool

    @property
    def nu_max_certified(self):
        return np.inf if self.kappa_min == 0 else 1.0 / self.kappa_min

    def as_dict(self):
        return {
            "rho_min": self.rho_min, "lambda_1": self.lambda_1,
            "kappa_min": self.kappa_min, "kappa": _finite_or_none(self.kappa),
            "certified": self.certified,
            "nu_max_certified": _finite_or_none(self.nu_max_certified),
        }


def _finite_or_none(x):
    return float(x) if np.isfinite(x) else None


def weyl_certificate(Qr, S, kappa=np.inf):
    """Certify convexity of ``Qr + kappa * diag(1/lam)``.

    ``S`` is the covariance matrix or its positive eigenvalues.
    """
    Qr = np.atleast_2d(np.asarray(getattr(Qr, "Q", Qr), dtype=float))
    S = np.asarray(getattr(S, "matrix", S), dtype=float)
    lam1 = float(np.linalg.eigvalsh(S).max() if S.ndim == 2 else S.max())
    rho = float(np.linalg.eigvalsh(0.5 * (Qr + Qr.T)).min())
    kappa_min = max(0.0, -rho * lam1)
    return WeylReport(rho, lam1, kappa_min, float(kappa), bool(kappa >= kappa_min))


# ------------------------------------------------------------------- solving

@dataclass
class Solution:
    c: np.ndarray
    c1: np.ndarray
    objective: float
    cost: float
    penalty: float
    nu: float
    admissibility: object = None
    diagnostics: dict = field(default_factory=dict)


def _is_positive_definite(H):
    """Cholesky with pivot tolerance ``1e-12 * trace / n``."""
    n = H.shape[0]
    tol = 1e-12 * max(np.trace(H) / n, np.finfo(float).tiny)
    try:
        C = linalg.cholesky(H, lower=True)
    except linalg.LinAlgError:
        return False, None
    if np.min(np.diag(C)) ** 2 <= tol:
        return False, None
    return True, C


def _kkt_residual(problem, x, active, multipliers):
    g = problem.gradient(x)
    if len(active):
        g = g + problem.L[active].T @ multipliers
    scale = 1.0 + np.abs(problem.linear).max(initial=0.0)
    return float(np.abs(g).max(initial=0.0) / scale)


def _feasible_start(problem):
    x = problem.mean
    if np.all(problem.L @ x <= problem.u + 1e-12):
        return x
    n = problem.sigma
    # phase one: min s subject to L x - s <= u
    res = optimize.linprog(
        np.r_[np.zeros(n), 1.0],
        A_ub=np.hstack([problem.L, -np.ones((problem.L.shape[0], 1))]),
        b_ub=problem.u, bounds=[(None, None)] * n + [(0, None)], method="highs",
    )
    if not res.success or res.x[-1] > 1e-10:
        raise NoAdmissibleSolutionError("endpoint band inequalities are infeasible")
    return res.x[:n]


def _active_set(problem, H, max_iter=500):
    """Primal active-set method for ``min x^T H x + b^T x, L x <= u``."""
    L, u, b = problem.L, problem.u, problem.linear
    x = _feasible_start(problem)
    slack_tol = 1e-12 * (1.0 + np.abs(u).max(initial=0.0))
    work = [i for i in range(L.shape[0]) if u[i] - L[i] @ x <= slack_tol]
    work = _independent(L, work)
    n = x.size
    for it in range(max_iter):
        m = len(work)
        Lw = L[work]
        KKT = np.block([[2.0 * H, Lw.T], [Lw, np.zeros((m, m))]])
        rhs = np.concatenate([-(2.0 * H @ x + b), np.zeros(m)])
        sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
        p, lam = sol[:n], sol[n:]
        if np.abs(p).max(initial=0.0) <= 1e-14 * (1.0 + np.abs(x).max()):
            if m == 0 or lam.min() >= -1e-12:
                return x, work, lam, it
            work.pop(int(np.argmin(lam)))
            continue
        alpha, blocking = 1.0, None
        for i in range(L.shape[0]):
            if i in work:
                continue
            step = L[i] @ p
            if step > 0:
                a = (u[i] - L[i] @ x) / step
                if a < alpha:
                    alpha, blocking = max(a, 0.0), i
        x = x + alpha * p
        if blocking is not None:
            work.append(blocking)
    raise NumericalError("active-set iteration did not converge")


def _independent(L, idx):
    kept = []
    for i in idx:
        trial = L[kept + [i]]
        if np.linalg.matrix_rank(trial) == len(kept) + 1:
            kept.append(i)
    return kept


def solve_reduced(problem):
    """Minimize the penalized objective in free coordinates.

    Convex problems without inequalities are solved in closed form, convex
    problems with band inequalities by a primal active-set method. Indefinite
    problems are unbounded without inequalities. With only a few inequality
    rows every face of the feasible set is searched, which gives the global
    minimum; otherwise a trust-region method returns a local solution flagged
    in ``diagnostics``.
    """
    H = 0.5 * (problem.hessian + problem.hessian.T)
    b = problem.linear
    pd, chol = _is_positive_definite(H)
    diag = {"convex": pd, "method": None, "iterations": 0, "active_set": [],
            "local": False}
    has_ineq = problem.L.shape[0] > 0
    if pd and not has_ineq:
        x = linalg.cho_solve((chol, True), -0.5 * b)
        diag["method"] = "closed-form"
        lam = np.zeros(0)
        active = []
    elif pd:
        x, active, lam, it = _active_set(problem, H)
        diag.update(method="active-set", iterations=it, active_set=[int(i) for i in active])
    elif not has_ineq:
        raise UnboundedProblemError(
            f"objective is indefinite at nu={problem.nu:g} and nothing bounds it")
    else:
        _check_recession(problem.L, H, problem.nu)
        active, lam = [], np.zeros(0)
        x = _search_faces(problem, H) if problem.L.shape[0] <= MAX_FACE_ROWS else None
        if x is not None:
            diag.update(method="face-enumeration")
        else:
            x, it = _trust_region(problem, H)
            diag.update(method="trust-region", iterations=it, local=True)
    if pd:
        diag["kkt_residual"] = _kkt_residual(problem, x, active, lam)
    return _package(problem, x, diag)


def _search_faces(problem, H):
    """Global minimizer of an indefinite but bounded problem, by faces.

    A minimizer lies in the relative interior of some face ``L_S x = u_S``
    on which the objective is strictly convex, unless the minimum sits on a
    flat direction. Each row subset is tried; ``None`` means no subset gave
    a strictly convex feasible candidate and the caller should fall back.
    """
    L, u, b = problem.L, problem.u, problem.linear
    n, m = H.shape[0], L.shape[0]
    tol = 1e-9 * (1.0 + np.abs(u))
    best, best_val = None, np.inf
    for size in range(min(m, n) + 1):
        for S in itertools.combinations(range(m), size):
            LS = L[list(S)]
            if size and np.linalg.matrix_rank(LS) < size:
                continue
            Z = linalg.null_space(LS) if size else np.eye(n)
            if Z.shape[1] and np.linalg.eigvalsh(Z.T @ H @ Z).min() <= 0:
                continue
            KKT = np.block([[2.0 * H, LS.T], [LS, np.zeros((size, size))]])
            y = np.linalg.solve(KKT, np.concatenate([-b, u[list(S)]]))[:n]
            if np.any(L @ y > u + tol):
                continue
            val = y @ H @ y + b @ y
            if val < best_val:
                best, best_val = y, val
    return best


def _trust_region(problem, H):
    b = problem.linear
    x0 = _feasible_start(problem)
    cons = [optimize.LinearConstraint(problem.L, -np.inf, problem.u)]
    res = optimize.minimize(
        lambda x: x @ H @ x + b @ x, x0, jac=lambda x: 2.0 * H @ x + b,
        hess=lambda x: 2.0 * H, method="trust-constr", constraints=cons,
        options={"gtol": 1e-8, "xtol": 1e-14, "maxiter": 5000},
    )
    if not np.all(np.isfinite(res.x)) or np.abs(res.x).max() > 1e12:
        raise UnboundedProblemError("trust-region iterates diverged")
    return _polish(problem, H, res.x), int(res.nit)


def _check_recession(L, H, nu):
    """Raise if negative curvature survives in the null space of ``L``.

    Both ``d`` and ``-d`` stay feasible along such a direction, so the
    objective has no lower bound whatever the remaining rows are.
    """
    Z = linalg.null_space(L) if L.shape[0] else np.eye(H.shape[0])
    if Z.shape[1] == 0:
        return
    curv = np.linalg.eigvalsh(Z.T @ H @ Z).min()
    # round-off in Z^T H Z is of order n * eps * ||H||
    noise = 100.0 * H.shape[0] * np.finfo(float).eps * np.abs(np.linalg.eigvalsh(H)).max()
    if curv < -noise:
        raise UnboundedProblemError(
            f"objective is indefinite at nu={nu:g} along directions the inequalities leave free")


def _polish(problem, H, x):
    """Snap an interior-point iterate onto its nearly active constraints.

    The barrier keeps iterates a little inside the feasible set. Solving the
    KKT system on the rows with small slack recovers the exact local
    solution, which is kept only if it is feasible, has non-negative
    multipliers, a positive semidefinite reduced Hessian and no worse
    objective.
    """
    L, u, b = problem.L, problem.u, problem.linear
    slack = u - L @ x
    near = _independent(L, list(np.flatnonzero(slack <= 1e-3 * (1.0 + np.abs(u)))))
    n, m = x.size, len(near)
    Ln = L[near]
    KKT = np.block([[2.0 * H, Ln.T], [Ln, np.zeros((m, m))]])
    try:
        sol = np.linalg.solve(KKT, np.concatenate([-b, u[near]]))
    except np.linalg.LinAlgError:
        return x
    y, lam = sol[:n], sol[n:]
    Z = linalg.null_space(Ln) if m else np.eye(n)
    curv = np.linalg.eigvalsh(Z.T @ H @ Z).min() if Z.shape[1] else 0.0
    feasible = np.all(L @ y <= u + 1e-12 * (1.0 + np.abs(u)))
    value = lambda v: v @ H @ v + b @ v  # noqa: E731
    if feasible and (m == 0 or lam.min() >= -1e-10) and curv >= -1e-12 and value(y) <= value(x):
        return y
    return x


def _package(problem, x, diag):
    dec = problem.decomposition
    c = dec.lift(x)
    return Solution(
        c=c, c1=np.asarray(x), objective=problem.objective(x),
        cost=float(problem.cost(x)), penalty=problem.penalty(x), nu=problem.nu,
        diagnostics=diag,
    )


# ------------------------------------------------------------------- tuning

def tune_nu(problem_builder, is_admissible, nu_max, max_iters=20):
    """Bisection for the largest admissible ``nu`` in ``(0, nu_max]``.

    Parameters
    ----------
    problem_builder : callable
        ``nu -> MapProblem``.
    is_admissible : callable
        ``Solution -> bool``.

    A candidate whose objective is unbounded counts as inadmissible.

    Returns
    -------
    nu_star : float
    solution : Solution
    """
    if not nu_max > 0:
        raise InvalidArgumentError("nu_max must be positive")
    trace = []

    def attempt(nu):
        try:
            sol = solve_reduced(problem_builder(nu))
        except UnboundedProblemError:
            trace.append((nu, False))
            return None
        ok = bool(is_admissible(sol))
        trace.append((nu, ok))
        return sol if ok else None

    best = attempt(nu_max)
    if best is not None:
        best.diagnostics["bisection"] = trace
        return nu_max, best
    lo_sol = attempt(0.0)
    if lo_sol is None:
        raise NoAdmissibleSolutionError(
            "the weighted reference mean (nu = 0) violates the constraints")
    lo, hi = 0.0, nu_max
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        sol = attempt(mid)
        if sol is None:
            hi = mid
        else:
            lo, lo_sol = mid, sol
    lo_sol.diagnostics["bisection"] = trace
    logger.info("bisection settled on nu=%.6g after %d trials", lo, len(trace))
    return lo, lo_sol
