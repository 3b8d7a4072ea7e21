"""Statistics of the reference set and the subspace split they induce.

The covariance of the reference coefficient vectors and the endpoint matrix
``A`` annihilate each other in the exact model, so they diagonalize in one
orthogonal basis ``V = (V1 V2 V3)``:

* ``V1`` spans the image of the covariance (the free directions),
* ``V3`` spans the row space of ``A`` (pinned by the endpoints),
* ``V2`` is what is left, pinned by the references themselves.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import (
    InsufficientDataError,
    InvalidArgumentError,
    ModelMismatchError,
    RankError,
)

logger = logging.getLogger(__name__)

DEFAULT_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class ReferenceSet:
    """Coefficient vectors of the references, one per row, with weights."""

    coefficients: np.ndarray
    weights: np.ndarray = None
    costs: np.ndarray = None
    labels: tuple = ()

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        n = C.shape[0]
        w = np.full(n, 1.0 / n) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (n,) or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("weights must be positive and sum to one")
        if not np.all(np.isfinite(C)):
            raise InvalidArgumentError("reference coefficients must be finite")
        costs = None if self.costs is None else np.asarray(self.costs, dtype=float)
        if costs is not None and costs.shape != (n,):
            raise InvalidArgumentError("one cost per reference is required")
        labels = tuple(self.labels) or tuple(f"ref{i:04d}" for i in range(n))
        object.__setattr__(self, "coefficients", C)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.coefficients.shape[0]

    @property
    def K(self):
        return self.coefficients.shape[1]

    @property
    def weighted_mean(self):
        return self.weights @ self.coefficients

    def subset(self, index, weights=None):
        index = np.asarray(index, dtype=int)
        return ReferenceSet(
            self.coefficients[index],
            weights=weights,
            costs=None if self.costs is None else self.costs[index],
            labels=tuple(self.labels[i] for i in index),
        )


def compute_weights(n=None, scheme="uniform", costs=None, weights=None):
    """Reference weights that are positive and sum to one.

    Parameters
    ----------
    n : int, optional
        Number of references, inferred from ``costs`` or ``weights``.
    scheme : {"uniform", "inverse-cost-rank", "user"}
        ``inverse-cost-rank`` gives the cheapest reference weight 1, the next
        1/2, and so on, before normalization.
    """
    if scheme == "uniform":
        if n is None:
            n = len(costs if costs is not None else weights)
        if n < 1:
            raise InvalidArgumentError("need at least one reference")
        return np.full(n, 1.0 / n)
    if scheme == "inverse-cost-rank":
        costs = np.asarray(costs, dtype=float)
        if costs.size < 1 or not np.all(np.isfinite(costs)):
            raise InvalidArgumentError("inverse-cost-rank needs finite costs")
        ranks = np.empty(costs.size)
        ranks[np.argsort(costs, kind="stable")] = np.arange(1, costs.size + 1)
        w = 1.0 / ranks
        return w / w.sum()
    if scheme == "user":
        w = np.asarray(weights, dtype=float)
        if w.size < 1 or np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise InvalidArgumentError("user weights must be positive")
        return w / w.sum()
    raise InvalidArgumentError(f"unknown weight scheme {scheme!r}")


@dataclass(frozen=True)
class CovarianceModel:
    matrix: np.ndarray
    rank: int
    threshold: float

    @classmethod
    def from_matrix(cls, S, rank_rtol=DEFAULT_RANK_RTOL):
        S = 0.5 * (S + S.T)
        ev = np.linalg.eigvalsh(S)
        lam1 = max(ev.max(initial=0.0), 0.0)
        thr = rank_rtol * lam1
        rank = int(np.sum(ev > thr)) if lam1 > 0 else 0
        return cls(S, rank, thr)


def estimate_covariance(refs, shrinkage=0.0, rank_rtol=DEFAULT_RANK_RTOL):
    """Empirical covariance (denominator ``I - 1``) with optional shrinkage.

    ``shrinkage`` blends toward ``trace / K`` times the identity.
    """
    C = refs.coefficients if isinstance(refs, ReferenceSet) else np.atleast_2d(refs)
    n, K = C.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 references, got {n}")
    if not 0.0 <= shrinkage <= 1.0:
        raise InvalidArgumentError("shrinkage must lie in [0, 1]")
    X = C - C.mean(axis=0)
    S = X.T @ X / (n - 1)
    if shrinkage > 0:
        S = (1 - shrinkage) * S + shrinkage * np.trace(S) / K * np.eye(K)
    return CovarianceModel.from_matrix(S, rank_rtol)


def _dependent_rows(A, tol):
    """Indices of rows lying in the span of the rows before them."""
    bad = []
    kept = np.zeros((0, A.shape[1]))
    for i, row in enumerate(A):
        trial = np.vstack([kept, row])
        s = np.linalg.svd(trial, compute_uv=False)
        if s.size and s[-1] <= tol * max(s[0], 1.0):
            bad.append(i)
        else:
            kept = trial
    return bad


def check_full_row_rank(A, tol=1e-10):
    A = np.atleast_2d(A)
    if A.shape[0] == 0:
        return
    s = np.linalg.svd(A, compute_uv=False)
    if s.size < A.shape[0] or s[-1] <= tol * s[0]:
        rows = _dependent_rows(A, tol)
        raise RankError(f"endpoint matrix is rank deficient; dependent rows {rows}", rows)


def kernel_projector(A):
    """Orthogonal projector onto ``ker A``."""
    A = np.atleast_2d(A)
    K = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(K)
    return np.eye(K) - np.linalg.pinv(A) @ A


def commutation_residual(S, A):
    """Relative size of ``S A^T A`` (zero in the exact model)."""
    AtA = A.T @ A
    scale = np.linalg.norm(S) * np.linalg.norm(AtA)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(S @ AtA) / scale)


def project_to_kernel(S, A):
    """Return ``P S P`` with ``P`` the projector onto ``ker A``."""
    S = np.asarray(getattr(S, "matrix", S), dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    check_full_row_rank(A)
    if A.shape[0]:
        logger.debug("commutation residual before projection: %.3e",
                     commutation_residual(S, A))
    P = kernel_projector(A)
    out = P @ S @ P
    return 0.5 * (out + out.T)


def pseudoinverse(S, rank_rtol=DEFAULT_RANK_RTOL):
    """Moore-Penrose inverse of a symmetric matrix through its eigenpairs."""
    S = np.asarray(S, dtype=float)
    scale = max(np.abs(S).max(initial=0.0), 1.0)
    if np.abs(S - S.T).max(initial=0.0) > 1e-10 * scale:
        raise InvalidArgumentError("pseudoinverse expects a symmetric matrix")
    ev, U = np.linalg.eigh(0.5 * (S + S.T))
    lam1 = np.abs(ev).max(initial=0.0)
    keep = np.abs(ev) > rank_rtol * lam1 if lam1 > 0 else np.zeros(ev.size, bool)
    inv = np.zeros_like(ev)
    inv[keep] = 1.0 / ev[keep]
    return (U * inv) @ U.T


@dataclass(frozen=True)
class SubspaceDecomposition:
    """Orthogonal split ``V = (V1 V2 V3)`` and the pinned coordinates.

    Attributes
    ----------
    V1, V2, V3 : ndarray
        Column blocks of sizes ``sigma``, ``K - sigma - a`` and ``a``.
    eigenvalues : ndarray
        Positive covariance eigenvalues on ``V1``, descending.
    singular_values : ndarray
        Diagonal of ``S_{A,2}``, so that ``A = U S_{A,2} V3^T``.
    U : ndarray
        Left singular vectors of the (exact-row) endpoint matrix.
    c2, c3 : ndarray
        Pinned values of ``V2^T c`` and ``V3^T c``.
    c2_spread : float
        Largest deviation of ``V2^T c_R`` from ``c2`` over the references.
    """

    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray
    eigenvalues: np.ndarray
    singular_values: np.ndarray
    U: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c2_spread: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def V(self):
        return np.hstack([self.V1, self.V2, self.V3])

    @property
    def sigma(self):
        return self.V1.shape[1]

    @property
    def a(self):
        return self.V3.shape[1]

    @property
    def K(self):
        return self.V1.shape[0]

    @property
    def c23(self):
        return np.concatenate([self.c2, self.c3])

    def reduce(self, c):
        """Free coordinates ``V1^T c`` (rows of a 2-D input are vectors)."""
        return np.asarray(c, dtype=float) @ self.V1

    def lift(self, c1):
        return self.V1 @ np.asarray(c1, dtype=float) + self.V2 @ self.c2 + self.V3 @ self.c3

    def covariance_pinv(self):
        """``Sigma^+`` rebuilt from the retained eigenpairs."""
        return (self.V1 / self.eigenvalues) @ self.V1.T


def _orthonormal_complement(B, K):
    if B.shape[1] == 0:
        return np.eye(K)
    return linalg.null_space(B.T)


def decompose(S, system, references=None, rank_rtol=DEFAULT_RANK_RTOL,
              commutation_tol=1e-8):
    """Simultaneously diagonalize the covariance and ``A^T A``.

    Parameters
    ----------
    S : ndarray or CovarianceModel
        Covariance already supported on ``ker A`` (see :func:`project_to_kernel`).
    system : EndpointSystem or ndarray
        Endpoint system whose rows are all pinned; pass ``(A, gamma)`` or an
        object with ``A`` and ``gamma`` attributes.
    references : ndarray or ReferenceSet, optional
        Reference coefficient vectors used to pin ``V2^T c``. Required when
        ``V2`` is not empty.
    """
    S = np.asarray(getattr(S, "matrix", S), dtype=float)
    if isinstance(system, tuple):
        A, gamma = system
    else:
        A, gamma = system.A, system.gamma
    A = np.atleast_2d(np.asarray(A, dtype=float))
    gamma = np.asarray(gamma, dtype=float).ravel()
    K = S.shape[0]
    if A.shape[0] == 0:
        A = np.zeros((0, K))
    if A.shape[1] != K:
        raise InvalidArgumentError(f"A has {A.shape[1]} columns, covariance is {K}x{K}")
    check_full_row_rank(A)

    residual = commutation_residual(S, A)
    if residual > commutation_tol:
        raise ModelMismatchError(
            f"covariance does not vanish on the endpoint row space "
            f"(relative residual {residual:.2e}); project it onto ker A first"
        )

    S = 0.5 * (S + S.T)
    ev, vec = np.linalg.eigh(S)
    order = np.argsort(ev)[::-1]
    ev, vec = ev[order], vec[:, order]
    lam1 = ev[0] if ev.size else 0.0
    keep = ev > rank_rtol * lam1 if lam1 > 0 else np.zeros(K, bool)
    V1 = vec[:, keep]
    lam = ev[keep]

    # row space of A inside the complement of V1
    N = _orthonormal_complement(V1, K)
    AtA = A.T @ A
    mu, W = np.linalg.eigh(N.T @ AtA @ N)
    order = np.argsort(mu)[::-1]
    mu, W = mu[order], W[:, order]
    m = A.shape[0]
    mu_max = mu[0] if mu.size else 0.0
    pos = mu > rank_rtol * mu_max if mu_max > 0 else np.zeros(mu.size, bool)
    if int(pos.sum()) < m:
        raise RankError(f"rank of A^T A is {int(pos.sum())}, expected {m}")
    V3 = N @ W[:, :m]
    V2 = N @ W[:, m:]
    s = np.sqrt(mu[:m])
    U = (A @ V3) / s if m else np.zeros((0, 0))
    c3 = (U.T @ gamma) / s if m else np.zeros(0)

    if V2.shape[1]:
        if references is None:
            raise InvalidArgumentError("references are required to pin V2 coordinates")
        R = getattr(references, "coefficients", references)
        proj = np.atleast_2d(np.asarray(R, dtype=float)) @ V2
        c2 = proj.mean(axis=0)
        spread = float(np.abs(proj - c2).max())
    else:
        c2 = np.zeros(0)
        spread = 0.0

    return SubspaceDecomposition(
        V1=V1, V2=V2, V3=V3, eigenvalues=lam, singular_values=s, U=U,
        c2=c2, c3=c3, c2_spread=spread,
        diagnostics={"commutation_residual": residual, "rank_rtol": rank_rtol},
    )
