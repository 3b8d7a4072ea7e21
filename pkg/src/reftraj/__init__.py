"""Data-regularized trajectory optimization on a finite Legendre basis."""

from .basis import BasisSpec, build_basis, eval_basis, eval_basis_derivative, gram_matrices
from .cost import (
    ForceFieldSpec,
    QuadraticInstantaneousCost,
    assemble_forcefield,
    assemble_quadratic,
    eval_cost_quadrature,
    fit_quadratic_cost,
    reduce_cost,
)
from .estimator import BasisProjector, ReferenceTrajectoryOptimizer
from .exceptions import (
    IngestionError,
    InvalidArgumentError,
    NoAdmissibleSolutionError,
    NumericalError,
    ReftrajError,
)
from .optimizer import build_map_problem, lift_solution, solve_reduced, tune_nu, weyl_certificate
from .pipeline import RunConfig, load_config, load_references, run_optimization, savings_report
from .refstats import ReferenceSet, decompose, estimate_covariance, project_to_kernel
from .trajectory import (
    CoefficientVector,
    EndpointConditions,
    TrajectorySamples,
    endpoint_system,
    project,
    reconstruct,
)
from .uncertainty import CostNoiseModel, confidence_interval

__version__ = "0.1.0"

__all__ = [
    "BasisSpec", "build_basis", "eval_basis", "eval_basis_derivative", "gram_matrices",
    "ForceFieldSpec", "QuadraticInstantaneousCost", "assemble_forcefield",
    "assemble_quadratic", "eval_cost_quadrature", "fit_quadratic_cost", "reduce_cost",
    "BasisProjector", "ReferenceTrajectoryOptimizer",
    "IngestionError", "InvalidArgumentError", "NoAdmissibleSolutionError",
    "NumericalError", "ReftrajError",
    "build_map_problem", "lift_solution", "solve_reduced", "tune_nu", "weyl_certificate",
    "RunConfig", "load_config", "load_references", "run_optimization", "savings_report",
    "ReferenceSet", "decompose", "estimate_covariance", "project_to_kernel",
    "CoefficientVector", "EndpointConditions", "TrajectorySamples", "endpoint_system",
    "project", "reconstruct",
    "CostNoiseModel", "confidence_interval",
]
