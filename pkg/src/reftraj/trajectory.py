"""Trajectories, their projection onto a basis, and endpoint/constraint checks."""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import BasisSpec, gauss_legendre_rule
from .exceptions import (
    ConstraintEvaluationError,
    CoverageError,
    InvalidArgumentError,
)


@dataclass(frozen=True)
class TrajectorySamples:
    """A sampled ``R^D``-valued trajectory.

    ``values`` has one row per entry of ``times`` and one column per variable.
    """

    times: np.ndarray
    values: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or times.size < 2:
            raise InvalidArgumentError("need at least two sample times")
        if values.shape[0] != times.size:
            raise InvalidArgumentError(
                f"{times.size} times but {values.shape[0]} value rows"
            )
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise InvalidArgumentError("samples contain non-finite entries")
        if np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("sample times must be strictly increasing")
        names = tuple(self.names) or tuple(f"y{d + 1}" for d in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise InvalidArgumentError("one name per column is required")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    @property
    def D(self):
        return self.values.shape[1]

    @property
    def duration(self):
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True)
class CoefficientVector:
    """Stacked basis coefficients ``(c^(1), ..., c^(D))`` of a trajectory."""

    entries: np.ndarray
    basis: BasisSpec

    def __post_init__(self):
        c = np.asarray(self.entries, dtype=float).ravel()
        if c.size != self.basis.K:
            raise InvalidArgumentError(
                f"expected {self.basis.K} coefficients, got {c.size}"
            )
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError("coefficients must be finite")
        object.__setattr__(self, "entries", c)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def component(self, d):
        return self.entries[self.basis.block(d)]


@dataclass(frozen=True)
class EndpointConditions:
    """Initial and final states with per-dimension tolerances.

    A NaN target leaves that endpoint of that dimension free. A zero
    tolerance requests exact equality.
    """

    y0: np.ndarray
    yT: np.ndarray
    tolerance: np.ndarray = None

    def __post_init__(self):
        y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        yT = np.atleast_1d(np.asarray(self.yT, dtype=float))
        if y0.shape != yT.shape:
            raise InvalidArgumentError("y0 and yT must have the same length")
        tol = np.zeros_like(y0) if self.tolerance is None else np.broadcast_to(
            np.asarray(self.tolerance, dtype=float), y0.shape).copy()
        if np.any(np.isinf(y0)) or np.any(np.isinf(yT)):
            raise InvalidArgumentError("endpoint targets must be finite or NaN")
        if not np.all(np.isfinite(tol)) or np.any(tol < 0):
            raise InvalidArgumentError("tolerances must be finite and non-negative")
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "yT", yT)
        object.__setattr__(self, "tolerance", tol)

    @property
    def D(self):
        return self.y0.size

    def matches(self, samples, tolerance=None):
        """Whether ``samples`` start and end at the targets within ``tolerance``."""
        tol = self.tolerance if tolerance is None else np.broadcast_to(tolerance, self.y0.shape)
        first, last = samples.values[0], samples.values[-1]
        ok0 = np.isnan(self.y0) | (np.abs(first - self.y0) <= tol)
        okT = np.isnan(self.yT) | (np.abs(last - self.yT) <= tol)
        return bool(np.all(ok0) and np.all(okT))


@dataclass(frozen=True)
class EndpointSystem:
    """Linear system ``A c = Gamma`` equivalent to the endpoint conditions.

    Rows follow the order ``y0[0..D-1], yT[0..D-1]``; rows of free endpoints
    are dropped, ``rows`` records which of the ``2 D`` candidates remain.
    ``tolerance`` is the per-row band half-width.
    """

    A: np.ndarray
    gamma: np.ndarray
    tolerance: np.ndarray
    rows: tuple

    @property
    def exact(self):
        """Mask of rows that must hold with equality."""
        return self.tolerance == 0

    def residual(self, c):
        return self.A @ np.asarray(c, dtype=float) - self.gamma

    def is_satisfied(self, c, atol=1e-10):
        return bool(np.all(np.abs(self.residual(c)) <= self.tolerance + atol))

    def subsystem(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return EndpointSystem(
            A=self.A[mask], gamma=self.gamma[mask], tolerance=self.tolerance[mask],
            rows=tuple(r for r, m in zip(self.rows, mask) if m),
        )


def endpoint_system(spec, conditions):
    """Assemble ``A(0, T)`` and ``Gamma`` from basis values at both ends."""
    if conditions.D != spec.D:
        raise InvalidArgumentError(
            f"conditions have {conditions.D} dimensions, basis has {spec.D}"
        )
    phi0 = spec.values(0.0)[0]
    phiT = spec.values(spec.T)[0]
    A = np.zeros((2 * spec.D, spec.K))
    for d, Kd in enumerate(spec.dims):
        A[d, spec.block(d)] = phi0[:Kd]
        A[spec.D + d, spec.block(d)] = phiT[:Kd]
    gamma = np.concatenate([conditions.y0, conditions.yT])
    tol = np.concatenate([conditions.tolerance, conditions.tolerance])
    keep = ~np.isnan(gamma)
    return EndpointSystem(
        A=A[keep], gamma=gamma[keep], tolerance=tol[keep],
        rows=tuple(int(r) for r in np.flatnonzero(keep)),
    )


def _interval_weights(times, spec, n):
    """Weights ``W`` with ``int L[y] phi_k dt = sum_j W[j, k] y_j``.

    ``L[y]`` is the piecewise-linear interpolant of the samples; each interval
    is integrated with a Gauss rule exact for (linear) x (basis polynomial).
    """
    rule = gauss_legendre_rule(max(1, (n + 2) // 2), 1.0)
    h = np.diff(times)
    # nodes within each interval, shape (intervals, q)
    s = rule.nodes[None, :]
    tq = times[:-1, None] + h[:, None] * s
    phi = spec.values(tq.ravel(), n).reshape(tq.shape + (n,))
    wq = h[:, None] * rule.weights[None, :]
    left = np.einsum("iq,iqk->ik", wq * (1.0 - s), phi)
    right = np.einsum("iq,iqk->ik", wq * s, phi)
    W = np.zeros((times.size, n))
    W[:-1] += left
    W[1:] += right
    return W


def project(samples, spec, coverage_tol=None):
    """Project sampled trajectory onto the basis, returning its coefficients.

    Samples are linearly interpolated and the interpolant's inner products with
    the basis functions are computed exactly. Samples outside ``[0, T]`` are
    clipped away by restricting the interpolant to the interval.
    """
    if samples.D != spec.D:
        raise InvalidArgumentError(
            f"samples have {samples.D} columns, basis has {spec.D} dimensions"
        )
    t = samples.times
    eps = (1e-9 * spec.T) if coverage_tol is None else coverage_tol
    if t[0] > eps or t[-1] < spec.T - eps:
        raise CoverageError(
            f"samples span [{t[0]:g}, {t[-1]:g}] which does not cover [0, {spec.T:g}]"
        )
    times, values = _restrict(t, samples.values, spec.T)
    W = _interval_weights(times, spec, spec.K_max)
    coef = W.T @ values  # (K_max, D)
    c = np.concatenate([coef[:Kd, d] for d, Kd in enumerate(spec.dims)])
    return CoefficientVector(c, spec)


def _restrict(t, y, T):
    """Clip a piecewise-linear signal to [0, T], adding exact end knots."""
    inside = (t > 0) & (t < T)
    knots = np.concatenate([[0.0], t[inside], [T]])
    vals = np.column_stack([np.interp(knots, t, y[:, d]) for d in range(y.shape[1])])
    return knots, vals


def reconstruct(c, times, names=()):
    """Evaluate the trajectory represented by ``c`` at ``times``."""
    spec = c.basis
    times = np.asarray(times, dtype=float)
    phi = spec.values(times)
    values = np.column_stack([
        phi[:, :Kd] @ c.component(d) for d, Kd in enumerate(spec.dims)
    ])
    return TrajectorySamples(times, values, names)


def reconstruct_derivative(c, times):
    """Time-derivative of the trajectory represented by ``c``, shape (n, D)."""
    spec = c.basis
    dphi = spec.derivatives(np.asarray(times, dtype=float))
    return np.column_stack([
        dphi[:, :Kd] @ c.component(d) for d, Kd in enumerate(spec.dims)
    ])


def rate_of_climb(samples, d):
    """Forward differences of column ``d``, aligned to interval left ends."""
    t = np.asarray(samples.times, dtype=float)
    dt = np.diff(t)
    if np.any(dt == 0):
        raise InvalidArgumentError("duplicate sample times")
    return np.diff(samples.values[:, d]) / dt


# ---------------------------------------------------------------- constraints

@dataclass(frozen=True)
class Constraint:
    """Scalar inequality ``func(state) <= 0`` over the instantaneous state.

    With ``uses_derivatives`` the state passed to ``func`` is the augmented
    vector ``(y(t), dy/dt(t))`` where derivatives are forward differences.
    """

    func: Callable
    name: str = "g"
    uses_derivatives: bool = False

    def __call__(self, x):
        return self.func(x)


def upper_bound(index, bound, name=None):
    return Constraint(lambda x: x[index] - bound, name or f"x[{index}] <= {bound}")


def lower_bound(index, bound, name=None):
    return Constraint(lambda x: bound - x[index], name or f"x[{index}] >= {bound}")


def derivative_upper_bound(index, bound, D, name=None):
    """``dy_index/dt <= bound`` on the derivative-augmented state."""
    return Constraint(lambda x: x[D + index] - bound,
                      name or f"d x[{index}]/dt <= {bound}", uses_derivatives=True)


@dataclass(frozen=True)
class ConstraintSet:
    constraints: Sequence = field(default_factory=tuple)
    grid_size: int = 200

    def __len__(self):
        return len(self.constraints)


@dataclass(frozen=True)
class ConstraintReport:
    admissible: bool
    worst: np.ndarray
    names: tuple = ()
    slack: float = 0.0

    def as_dict(self):
        return {
            "admissible": self.admissible,
            "slack": self.slack,
            "worst_violation": {n: float(w) for n, w in zip(self.names, self.worst)},
        }


def augmented_states(samples):
    """States ``(y, dy/dt)`` with forward differences, last row repeated."""
    D = samples.D
    rates = np.column_stack([rate_of_climb(samples, d) for d in range(D)])
    rates = np.vstack([rates, rates[-1:]])
    return np.hstack([samples.values, rates])


def check_constraints(samples, constraint_set, slack=0.0):
    """Evaluate every constraint at every sample time."""
    constraints = list(getattr(constraint_set, "constraints", constraint_set))
    names = tuple(getattr(g, "name", f"g{i + 1}") for i, g in enumerate(constraints))
    if not constraints:
        return ConstraintReport(True, np.zeros(0), names, slack)
    needs_rates = any(getattr(g, "uses_derivatives", False) for g in constraints)
    states = augmented_states(samples) if needs_rates else samples.values
    worst = np.empty(len(constraints))
    for i, g in enumerate(constraints):
        vals = np.array([g(x) for x in states], dtype=float)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            raise ConstraintEvaluationError(
                f"constraint {names[i]!r} returned {vals[j]} at t={samples.times[j]:g}",
                index=i, time=float(samples.times[j]),
            )
        worst[i] = vals.max()
    return ConstraintReport(bool(np.all(worst <= slack)), worst, names, slack)
