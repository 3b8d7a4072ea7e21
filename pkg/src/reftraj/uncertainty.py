"""Confidence bounds on an integrated cost under white regression noise.

If the true instantaneous cost is ``f(y(t)) + eps(t)`` with independent
``eps(t) ~ N(0, sigma^2)``, the integrated noise over ``[0, T]`` is
``N(0, T sigma^2)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .exceptions import InvalidArgumentError


@dataclass(frozen=True)
class CostNoiseModel:
    sigma: float
    T: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise InvalidArgumentError("sigma must be non-negative")
        if not self.T > 0:
            raise InvalidArgumentError("T must be positive")

    @property
    def integrated_std(self):
        return float(np.sqrt(self.T) * self.sigma)


def normal_quantile(p):
    return float(ndtri(p))


def confidence_interval(value, noise, confidence=0.95):
    """Two-sided interval ``value +- z_{1 - u/2} sqrt(T) sigma``.

    ``confidence`` is ``1 - u`` with ``u`` in ``(0, 1)``.
    """
    u = 1.0 - confidence
    if not 0.0 < u < 1.0:
        raise InvalidArgumentError(f"confidence must lie in (0, 1), got {confidence}")
    half = normal_quantile(1.0 - u / 2.0) * noise.integrated_std
    return float(value - half), float(value + half)


def simulate_coverage(value, noise, confidence=0.95, n_rep=50_000, n_steps=100, seed=0):
    """Fraction of simulated true costs falling in the interval.

    White noise is discretized on ``n_steps`` cells with variance
    ``sigma^2 / dt`` per cell so that the Riemann sum has variance
    ``T sigma^2``.
    """
    rng = np.random.default_rng(seed)
    dt = noise.T / n_steps
    eps = rng.normal(0.0, noise.sigma / np.sqrt(dt), size=(n_rep, n_steps))
    true = value + eps.sum(axis=1) * dt
    lo, hi = confidence_interval(value, noise, confidence)
    return float(np.mean((true >= lo) & (true <= hi)))
