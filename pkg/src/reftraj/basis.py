"""Orthonormal shifted-Legendre bases on ``[0, T]``.

The family is ``phi_k(t) = sqrt((2k - 1) / T) * P_{k-1}(2 t / T - 1)`` for
``k = 1, 2, ...``, orthonormal for the unweighted inner product
``<f, g> = int_0^T f g dt``. All trajectory dimensions share the family and
differ only in how many leading functions they keep.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .exceptions import InvalidArgumentError, OutOfDomainError

# relative slack when checking that a time lies in [0, T]
_DOMAIN_RTOL = 1e-12


class BasisKind(str, Enum):
    LEGENDRE = "legendre"


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule mapped to ``[0, T]``.

    ``order`` is the highest polynomial degree integrated exactly.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values):
        """Integrate samples taken at ``nodes`` (first axis)."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def gauss_legendre_rule(n, T=1.0):
    """Return the ``n``-node Gauss-Legendre rule on ``[0, T]``.

    Exact for polynomials of degree up to ``2 n - 1``.
    """
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"number of nodes must be >= 1, got {n}")
    if not T > 0:
        raise InvalidArgumentError(f"interval end must be positive, got {T}")
    x, w = np.polynomial.legendre.leggauss(int(n))
    nodes = 0.5 * T * (x + 1.0)
    weights = 0.5 * T * w
    return QuadratureRule(nodes=nodes, weights=weights, order=2 * int(n) - 1)


def _legendre_values(x, n):
    """Classical Legendre P_0..P_{n-1} and their derivatives at ``x``.

    Three-term recurrence; returns two arrays of shape ``(len(x), n)``.
    """
    x = np.asarray(x, dtype=float)
    p = np.zeros((x.size, n))
    dp = np.zeros((x.size, n))
    p[:, 0] = 1.0
    if n > 1:
        p[:, 1] = x
        dp[:, 1] = 1.0
    for j in range(1, n - 1):
        p[:, j + 1] = ((2 * j + 1) * x * p[:, j] - j * p[:, j - 1]) / (j + 1)
        dp[:, j + 1] = dp[:, j - 1] + (2 * j + 1) * p[:, j]
    return p, dp


@dataclass(frozen=True)
class BasisSpec:
    """Basis family, per-dimension truncation orders and time horizon.

    Parameters
    ----------
    kind : BasisKind
        Function family. Only shifted Legendre is available.
    T : float
        Interval end, the basis lives on ``[0, T]``.
    dims : tuple of int
        Number of basis functions ``K_d`` kept for each trajectory dimension.
    """

    kind: BasisKind
    T: float
    dims: tuple = field(default_factory=tuple)

    @property
    def D(self):
        return len(self.dims)

    @property
    def K(self):
        return int(sum(self.dims))

    @property
    def K_max(self):
        return int(max(self.dims))

    @cached_property
    def offsets(self):
        """Start index of each dimension's block in a stacked vector."""
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)

    def block(self, d):
        """Slice selecting dimension ``d`` in a coefficient vector."""
        return slice(int(self.offsets[d]), int(self.offsets[d + 1]))

    def _check_times(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        slack = _DOMAIN_RTOL * max(1.0, self.T)
        bad = (t < -slack) | (t > self.T + slack) | ~np.isfinite(t)
        if np.any(bad):
            raise OutOfDomainError(
                f"time {t[bad][0]!r} outside [0, {self.T}]"
            )
        return np.clip(t, 0.0, self.T)

    def _scale(self, n):
        k = np.arange(1, n + 1)
        return np.sqrt((2 * k - 1) / self.T)

    def values(self, t, n=None):
        """Matrix ``(len(t), n)`` of basis values, ``n`` defaults to ``K_max``."""
        n = self.K_max if n is None else n
        t = self._check_times(t)
        p, _ = _legendre_values(2.0 * t / self.T - 1.0, n)
        return p * self._scale(n)

    def derivatives(self, t, n=None):
        """Matrix ``(len(t), n)`` of basis time-derivatives."""
        n = self.K_max if n is None else n
        t = self._check_times(t)
        _, dp = _legendre_values(2.0 * t / self.T - 1.0, n)
        return dp * self._scale(n) * (2.0 / self.T)

    def default_quadrature(self):
        """Smallest rule exact for products of two basis functions."""
        n = 1
        while 2 * n - 1 < 2 * self.K_max:
            n += 1
        return gauss_legendre_rule(n, self.T)

    @cached_property
    def integrals(self):
        """``int_0^T phi_k dt`` for ``k = 1..K_max``."""
        rule = self.default_quadrature()
        return rule.integrate(self.values(rule.nodes))

    @cached_property
    def derivative_integrals(self):
        """``int_0^T phi_k' dt = phi_k(T) - phi_k(0)``."""
        rule = self.default_quadrature()
        return rule.integrate(self.derivatives(rule.nodes))


def build_basis(kind="legendre", dims=(1,), T=1.0):
    """Validate arguments and return a :class:`BasisSpec`."""
    try:
        kind = BasisKind(kind)
    except ValueError:
        raise InvalidArgumentError(f"unknown basis kind {kind!r}") from None
    if T is None or not np.isfinite(T) or T <= 0:
        raise InvalidArgumentError(f"interval end must be positive, got {T}")
    dims = tuple(int(k) for k in np.atleast_1d(dims))
    if len(dims) == 0:
        raise InvalidArgumentError("dims must be non-empty")
    if min(dims) < 1:
        raise InvalidArgumentError(f"every dimension needs >= 1 function, got {dims}")
    return BasisSpec(kind=kind, T=float(T), dims=dims)


def eval_basis(spec, t):
    """Values ``phi_1(t) .. phi_{K_max}(t)`` at a scalar time."""
    return spec.values(t)[0]


def eval_basis_derivative(spec, t):
    """Derivatives ``phi_1'(t) .. phi_{K_max}'(t)`` at a scalar time."""
    return spec.derivatives(t)[0]


def gram_matrices(spec, rule=None):
    """Gram matrices of the basis and its derivatives.

    Returns
    -------
    G : ndarray
        ``int phi_k phi_l dt`` (the identity up to rounding).
    D1 : ndarray
        ``int phi_k' phi_l dt``.
    E2 : ndarray
        ``int phi_k' phi_l' dt``.
    """
    rule = spec.default_quadrature() if rule is None else rule
    phi = spec.values(rule.nodes)
    dphi = spec.derivatives(rule.nodes)
    w = rule.weights[:, None]
    G = phi.T @ (w * phi)
    D1 = dphi.T @ (w * phi)
    E2 = dphi.T @ (w * dphi)
    return G, D1, E2
