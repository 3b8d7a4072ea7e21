"""Integrated costs as explicit quadratic forms on coefficient space.

For ``F(y) = int_0^T f(y(t)) dt`` with quadratic ``f`` and trajectories in the
span of the basis, ``F`` is a quadratic function ``c^T Q c + w^T c + const``
of the stacked coefficient vector. The same holds for the force-field cost
``alpha * int |y'|^2 dt - int V(y)^T y' dt`` when ``V`` is affine.
"""

from dataclasses import dataclass

import numpy as np

from .basis import gauss_legendre_rule, gram_matrices
from .exceptions import (
    CollinearityError,
    DegenerateProblemError,
    InvalidArgumentError,
)
from .trajectory import CoefficientVector


def _symmetric(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise InvalidArgumentError(f"{name} must be square")
    if np.abs(M - M.T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(M).max(initial=0.0)):
        raise InvalidArgumentError(f"{name} must be symmetric")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class QuadraticInstantaneousCost:
    """``f(x) = x^T Q x + w^T x + r``."""

    Q: np.ndarray
    w: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        Q = _symmetric(self.Q, "Q")
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if w.shape != (Q.shape[0],):
            raise InvalidArgumentError("w must have one entry per state dimension")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "r", float(self.r))

    @property
    def D(self):
        return self.w.size

    def __call__(self, x):
        """Evaluate on one state or on rows of a state matrix."""
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.Q, x) + x @ self.w + self.r

    def to_dict(self):
        return {"Q": self.Q.tolist(), "w": self.w.tolist(), "r": self.r}


@dataclass(frozen=True)
class ForceFieldSpec:
    """Affine field ``V(x) = M x + b`` and trade-off ``alpha``.

    The integrated cost is ``alpha * J - W`` with ``J = int |y'|^2`` and
    ``W = int V(y)^T y'``.
    """

    M: np.ndarray
    b: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if M.shape != (b.size, b.size):
            raise InvalidArgumentError("M must be D x D with D = len(b)")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("field entries must be finite")
        if not self.alpha >= 0:
            raise InvalidArgumentError(f"alpha must be non-negative, got {self.alpha}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def D(self):
        return self.b.size

    def field(self, x):
        return np.asarray(x, dtype=float) @ self.M.T + self.b

    def integrand(self, x, dx):
        """``alpha |x'|^2 - V(x)^T x'`` row-wise."""
        dx = np.asarray(dx, dtype=float)
        return self.alpha * np.sum(dx * dx, axis=-1) - np.sum(self.field(x) * dx, axis=-1)

    def to_dict(self):
        return {"M": self.M.tolist(), "b": self.b.tolist(), "alpha": self.alpha}


@dataclass(frozen=True)
class AssembledQuadraticCost:
    """``F(c) = c^T Q c + w^T c + constant`` on ``R^K``."""

    Q: np.ndarray
    w: np.ndarray
    constant: float = 0.0

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        return np.einsum("...i,ij,...j->...", c, self.Q, c) + c @ self.w + self.constant

    def gradient(self, c):
        return 2.0 * self.Q @ np.asarray(c, dtype=float) + self.w


@dataclass(frozen=True)
class ReducedQuadraticCost:
    """The cost restricted to the free coordinates of the endpoint subspace."""

    Q: np.ndarray
    w: np.ndarray
    r: float = 0.0

    def __call__(self, c1):
        c1 = np.asarray(c1, dtype=float)
        return np.einsum("...i,ij,...j->...", c1, self.Q, c1) + c1 @ self.w + self.r


def assemble_quadratic(f, spec):
    """Lift a quadratic instantaneous cost to coefficient space.

    Block ``(d, e)`` of the matrix is ``Q[d, e]`` times the Gram matrix of the
    leading ``K_d`` and ``K_e`` basis functions; the linear term of dimension
    ``d`` is ``w[d]`` times the basis integrals.
    """
    if f.D != spec.D:
        raise InvalidArgumentError(f"cost has {f.D} dimensions, basis has {spec.D}")
    G, _, _ = gram_matrices(spec)
    ints = spec.integrals
    Qc = np.zeros((spec.K, spec.K))
    wc = np.zeros(spec.K)
    for d, Kd in enumerate(spec.dims):
        bd = spec.block(d)
        wc[bd] = f.w[d] * ints[:Kd]
        for e, Ke in enumerate(spec.dims):
            Qc[bd, spec.block(e)] = f.Q[d, e] * G[:Kd, :Ke]
    Qc = 0.5 * (Qc + Qc.T)
    return AssembledQuadraticCost(Qc, wc, f.r * spec.T)


def assemble_forcefield(field_spec, spec):
    """Lift ``alpha * J - W`` with an affine field to coefficient space.

    With ``Ghat[k, l] = int phi_k phi_l' dt`` the work is
    ``sum_{d,e} M[d, e] c_e^T Ghat c_d + sum_d b_d (int phi_l') c_{d,l}``.
    """
    if field_spec.alpha < 0:
        raise InvalidArgumentError("alpha must be non-negative")
    if field_spec.D != spec.D:
        raise InvalidArgumentError(
            f"field has {field_spec.D} dimensions, basis has {spec.D}")
    _, D1, E2 = gram_matrices(spec)
    Ghat = D1.T
    dints = spec.derivative_integrals
    B = np.zeros((spec.K, spec.K))
    wc = np.zeros(spec.K)
    M, b = field_spec.M, field_spec.b
    for d, Kd in enumerate(spec.dims):
        bd = spec.block(d)
        B[bd, bd] += field_spec.alpha * E2[:Kd, :Kd]
        wc[bd] = -b[d] * dints[:Kd]
        for e, Ke in enumerate(spec.dims):
            # c_e^T Ghat[:Ke, :Kd] c_d, stored as block (e, d)
            B[spec.block(e), bd] -= M[d, e] * Ghat[:Ke, :Kd]
    return AssembledQuadraticCost(0.5 * (B + B.T), wc, 0.0)


def eval_cost_quadrature(cost, c, spec=None, n_nodes=None):
    """Integrate a cost along the trajectory of ``c`` with Gauss-Legendre.

    Independent of the assembled forms: the trajectory (and its derivative)
    is evaluated pointwise and the integrand summed with quadrature weights.

    Parameters
    ----------
    cost : QuadraticInstantaneousCost, ForceFieldSpec or callable
        A plain callable is treated as an instantaneous cost ``f(states)``
        acting on an ``(n, D)`` matrix.
    """
    if isinstance(c, CoefficientVector):
        spec = c.basis
        c = c.entries
    c = np.asarray(c, dtype=float)
    if n_nodes is None:
        n_nodes = 2 * spec.K_max + 2
    rule = gauss_legendre_rule(n_nodes, spec.T)
    phi = spec.values(rule.nodes)
    y = np.column_stack([phi[:, :Kd] @ c[spec.block(d)] for d, Kd in enumerate(spec.dims)])
    if isinstance(cost, ForceFieldSpec):
        dphi = spec.derivatives(rule.nodes)
        dy = np.column_stack([dphi[:, :Kd] @ c[spec.block(d)]
                              for d, Kd in enumerate(spec.dims)])
        vals = cost.integrand(y, dy)
    else:
        vals = cost(y)
    return float(rule.weights @ vals)


def reduce_cost(assembled, decomposition):
    """Restrict an assembled cost to ``c = V1 c1 + V2 c2 + V3 c3``."""
    dec = decomposition
    if assembled.Q.shape[0] != dec.K:
        raise InvalidArgumentError("cost and decomposition disagree on K")
    if dec.sigma == 0:
        raise DegenerateProblemError("covariance has rank 0, no free coordinates")
    V23 = np.hstack([dec.V2, dec.V3])
    c23 = dec.c23
    Q11 = dec.V1.T @ assembled.Q @ dec.V1
    Q12 = dec.V1.T @ assembled.Q @ V23
    Q22 = V23.T @ assembled.Q @ V23
    w1 = dec.V1.T @ assembled.w
    w2 = V23.T @ assembled.w
    Qr = 0.5 * (Q11 + Q11.T)
    wr = 2.0 * Q12 @ c23 + w1
    rr = float(c23 @ Q22 @ c23 + w2 @ c23 + assembled.constant)
    return ReducedQuadraticCost(Qr, wr, rr)


# ------------------------------------------------------------------ fitting

def _quadratic_features(X):
    n, D = X.shape
    iu = np.triu_indices(D)
    cross = (X[:, :, None] * X[:, None, :])[:, iu[0], iu[1]]
    return np.hstack([np.ones((n, 1)), X, cross]), iu


@dataclass(frozen=True)
class QuadraticFit:
    cost: QuadraticInstantaneousCost
    residual_std: float
    rmse: float
    mape: float
    n_samples: int

    def to_dict(self):
        out = self.cost.to_dict()
        out.update(residual_std=self.residual_std, rmse=self.rmse,
                   mape=self.mape, n_samples=self.n_samples)
        return out


def fit_quadratic_cost(states, costs):
    """Least-squares fit of a degree-2 polynomial ``f`` to cost samples.

    Parameters
    ----------
    states : ndarray, shape (n, D)
    costs : ndarray, shape (n,)

    Returns
    -------
    QuadraticFit
        Fitted cost with residual standard deviation (denominator ``n - p``),
        RMSE and MAPE (percent; NaN when some target is zero).
    """
    X = np.atleast_2d(np.asarray(states, dtype=float))
    if X.shape[0] == 1 and np.ndim(states) == 1:
        X = X.T
    y = np.asarray(costs, dtype=float).ravel()
    n, D = X.shape
    if y.size != n:
        raise InvalidArgumentError("one cost per state is required")
    Phi, iu = _quadratic_features(X)
    p = Phi.shape[1]
    if n < p:
        raise InvalidArgumentError(f"need at least {p} samples for a quadratic in {D} variables")
    # column equilibration keeps the rank test meaningful across raw units
    scale = np.linalg.norm(Phi, axis=0)
    if np.any(scale == 0):
        raise CollinearityError("a quadratic feature is identically zero")
    Qf, Rf = np.linalg.qr(Phi / scale)
    diag = np.abs(np.diag(Rf))
    if diag.min() <= 1e-10 * diag.max():
        raise CollinearityError("design matrix of quadratic features is rank deficient")
    beta = np.linalg.solve(Rf, Qf.T @ y) / scale
    resid = y - Phi @ beta
    Q = np.zeros((D, D))
    for b, i, j in zip(beta[1 + D:], *iu):
        if i == j:
            Q[i, i] = b
        else:
            Q[i, j] = Q[j, i] = 0.5 * b
    dof = n - p
    sigma = float(np.sqrt(resid @ resid / dof)) if dof > 0 else 0.0
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    with np.errstate(divide="ignore", invalid="ignore"):
        mape = float(100.0 * np.mean(np.abs(resid / y))) if np.all(y != 0) else float("nan")
    cost = QuadraticInstantaneousCost(Q, beta[1:1 + D], beta[0])
    return QuadraticFit(cost, sigma, rmse, mape, n)
