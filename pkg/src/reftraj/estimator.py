"""scikit-learn style front-ends.

:class:`BasisProjector` maps sampled trajectories to coefficient vectors and
back. :class:`ReferenceTrajectoryOptimizer` is fitted on reference
coefficient vectors and exposes the optimized trajectory through
:meth:`~ReferenceTrajectoryOptimizer.predict`.
"""

import logging

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_coefficients, check_endpoints, check_samples_list
from .basis import build_basis
from .cost import (
    AssembledQuadraticCost,
    ForceFieldSpec,
    QuadraticInstantaneousCost,
    assemble_forcefield,
    assemble_quadratic,
    reduce_cost,
)
from .exceptions import InvalidArgumentError
from .optimizer import (
    build_map_problem,
    solve_reduced,
    tune_nu,
    weyl_certificate,
)
from .refstats import (
    DEFAULT_RANK_RTOL,
    ReferenceSet,
    compute_weights,
    decompose,
    estimate_covariance,
    project_to_kernel,
)
from .trajectory import (
    CoefficientVector,
    ConstraintSet,
    check_constraints,
    endpoint_system,
    project,
    reconstruct,
)

logger = logging.getLogger(__name__)


class BasisProjector(TransformerMixin, BaseEstimator):
    """Project sampled trajectories onto a truncated Legendre basis.

    Parameters
    ----------
    dims : sequence of int
        Number of basis functions per variable.
    T : float, optional
        Horizon. Defaults to the longest duration seen in :meth:`fit`.
    kind : str
        Basis family.
    """

    def __init__(self, dims=(4,), T=None, kind="legendre"):
        self.dims = dims
        self.T = T
        self.kind = kind

    def fit(self, X, y=None):
        samples = check_samples_list(X)
        T = self.T if self.T is not None else max(s.times[-1] for s in samples)
        self.basis_ = build_basis(self.kind, self.dims, T)
        self.n_features_in_ = self.basis_.D
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        samples = check_samples_list(X)
        return np.vstack([project(s, self.basis_).entries for s in samples])

    def inverse_transform(self, X, times=None):
        """Evaluate coefficient rows on ``times`` (default 200 uniform points)."""
        check_is_fitted(self, "basis_")
        C = check_coefficients(X, self.basis_.K)
        times = np.linspace(0.0, self.basis_.T, 200) if times is None else times
        return np.stack([reconstruct(CoefficientVector(c, self.basis_), times).values
                         for c in C])


def _assemble(cost, basis):
    if isinstance(cost, AssembledQuadraticCost):
        return cost
    if isinstance(cost, ForceFieldSpec):
        return assemble_forcefield(cost, basis)
    if isinstance(cost, QuadraticInstantaneousCost):
        return assemble_quadratic(cost, basis)
    raise InvalidArgumentError(f"unsupported cost {type(cost).__name__}")


class ReferenceTrajectoryOptimizer(BaseEstimator):
    """Optimize a trajectory regularized toward reference trajectories.

    The cost is minimized over coefficient vectors that meet the endpoint
    conditions, penalized by the weighted Mahalanobis distance to the best
    references under the covariance of all references. The cost weight
    ``nu`` is tuned by bisection so that the result satisfies
    ``constraints``.

    Parameters
    ----------
    dims : sequence of int
        Basis functions per variable.
    T : float
        Horizon of the basis.
    endpoints : EndpointConditions or dict
        Dict form takes keys ``y0``, ``yT`` and optional ``tolerance``.
    cost : QuadraticInstantaneousCost, ForceFieldSpec or AssembledQuadraticCost
    constraints : sequence of Constraint
        Checked on ``grid_size`` uniform times.
    nu_max : float
        Upper end of the bisection interval.
    n_bisection : int
        Bisection steps.
    nu : float, optional
        Solve at this ``nu`` and skip the bisection.
    n_best : int, optional
        Number of cheapest references entering the penalty (all by default).
    weight_scheme : {"uniform", "inverse-cost-rank", "user"}
    user_weights : sequence of float, optional
        Weights of the selected references for the ``user`` scheme.
    shrinkage : float
        Shrinkage of the covariance toward a scaled identity.
    rank_rtol : float
        Relative eigenvalue threshold for the covariance rank.
    grid_size : int
        Times at which constraints are checked.
    admissibility_slack : float
        Constraint values up to this are accepted.

    Attributes
    ----------
    basis_ : BasisSpec
    reference_costs_ : ndarray
        Cost of every reference.
    best_index_ : ndarray
        Indices of the references in the penalty, cheapest first.
    covariance_ : CovarianceModel
        Estimated covariance, before projection onto ``ker A``.
    decomposition_ : SubspaceDecomposition
    weyl_ : WeylReport
        Certificate evaluated at ``kappa = 1 / nu_max``.
    nu_ : float
    solution_ : Solution
    coef_ : ndarray
        Optimized coefficient vector.
    """

    def __init__(self, dims=(4,), T=1.0, endpoints=None, cost=None, constraints=(),
                 nu_max=1.0, n_bisection=20, nu=None, n_best=None,
                 weight_scheme="uniform", user_weights=None, shrinkage=0.0,
                 rank_rtol=DEFAULT_RANK_RTOL, grid_size=200, admissibility_slack=0.0):
        self.dims = dims
        self.T = T
        self.endpoints = endpoints
        self.cost = cost
        self.constraints = constraints
        self.nu_max = nu_max
        self.n_bisection = n_bisection
        self.nu = nu
        self.n_best = n_best
        self.weight_scheme = weight_scheme
        self.user_weights = user_weights
        self.shrinkage = shrinkage
        self.rank_rtol = rank_rtol
        self.grid_size = grid_size
        self.admissibility_slack = admissibility_slack

    def fit(self, X, y=None):
        """Fit on reference coefficient vectors ``X`` of shape ``(I, K)``.

        ``y`` is ignored.
        """
        basis = build_basis("legendre", self.dims, self.T)
        C = check_coefficients(X, basis.K)
        if self.cost is None:
            raise InvalidArgumentError("a cost is required")
        conditions = check_endpoints(self.endpoints, basis.D)
        assembled = _assemble(self.cost, basis)
        costs = assembled(C)

        n_best = len(C) if self.n_best is None else min(int(self.n_best), len(C))
        order = np.argsort(costs, kind="stable")
        best = order[:n_best]
        weights = compute_weights(
            n_best, self.weight_scheme, costs=costs[best], weights=self.user_weights)

        covariance = estimate_covariance(C, self.shrinkage, self.rank_rtol)
        system = endpoint_system(basis, conditions)
        exact = system.subsystem(system.exact)
        bands = system.subsystem(~system.exact)
        S = project_to_kernel(covariance.matrix, exact.A)
        dec = decompose(S, exact, C, self.rank_rtol)
        reduced = reduce_cost(assembled, dec)
        refs = ReferenceSet(C[best], weights=weights, costs=costs[best])
        weyl = weyl_certificate(reduced.Q, dec.eigenvalues, 1.0 / self.nu_max)

        constraint_set = ConstraintSet(tuple(self.constraints), self.grid_size)
        grid = np.linspace(0.0, basis.T, self.grid_size)

        def builder(nu):
            return build_map_problem(reduced, dec, refs, nu, bands)

        def admissible(sol):
            samples = reconstruct(CoefficientVector(sol.c, basis), grid)
            report = check_constraints(samples, constraint_set, self.admissibility_slack)
            sol.admissibility = report
            return report.admissible and system.is_satisfied(sol.c, atol=1e-8)

        if self.nu is not None:
            nu_star = float(self.nu)
            sol = solve_reduced(builder(nu_star))
            admissible(sol)
        else:
            nu_star, sol = tune_nu(builder, admissible, self.nu_max, self.n_bisection)

        self.basis_ = basis
        self.conditions_ = conditions
        self.endpoint_system_ = system
        self.assembled_cost_ = assembled
        self.reference_costs_ = costs
        self.best_index_ = best
        self.weights_ = weights
        self.covariance_ = covariance
        self.decomposition_ = dec
        self.reduced_cost_ = reduced
        self.weyl_ = weyl
        self.nu_ = nu_star
        self.solution_ = sol
        self.coef_ = sol.c
        self.cost_ = float(assembled(sol.c))
        self.n_features_in_ = basis.K
        return self

    @property
    def coefficient_vector_(self):
        check_is_fitted(self, "coef_")
        return CoefficientVector(self.coef_, self.basis_)

    def predict(self, times=None):
        """Optimized trajectory at ``times``, shape ``(len(times), D)``."""
        check_is_fitted(self, "coef_")
        times = np.linspace(0.0, self.basis_.T, self.grid_size) if times is None else times
        return reconstruct(self.coefficient_vector_, times).values

    def score(self, X=None, y=None):
        """Negative optimized cost (higher is better)."""
        check_is_fitted(self, "coef_")
        return -self.cost_
