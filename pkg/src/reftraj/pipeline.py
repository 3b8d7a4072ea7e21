"""End-to-end runs: ingestion, optimization, reporting and output files.

Reference files are CSV with a header row, a ``time`` column and one column
per configured variable. A run is described by a YAML or JSON document with
the sections ``data``, ``basis``, ``endpoints``, ``constraints``, ``cost``,
``optimizer`` and ``output``; see :class:`RunConfig`.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .basis import build_basis
from .cost import (
    ForceFieldSpec,
    QuadraticInstantaneousCost,
    assemble_forcefield,
    assemble_quadratic,
    fit_quadratic_cost,
)
from .estimator import ReferenceTrajectoryOptimizer
from .exceptions import (
    ConfigError,
    EmptyReferenceSetError,
    IngestionError,
    InvalidArgumentError,
    ReftrajError,
    StageError,
)
from .refstats import DEFAULT_RANK_RTOL, ReferenceSet
from .trajectory import (
    CoefficientVector,
    EndpointConditions,
    TrajectorySamples,
    check_constraints,
    ConstraintSet,
    derivative_upper_bound,
    lower_bound,
    project,
    reconstruct,
    reconstruct_derivative,
    upper_bound,
)
from .uncertainty import CostNoiseModel, confidence_interval

logger = logging.getLogger(__name__)

TIME_COLUMN = "time"
CONSTRAINT_TYPES = ("upper-bound", "lower-bound", "derivative-upper-bound")
COST_SOURCES = ("explicit", "fitted", "force-field")


# ------------------------------------------------------------------- config

@dataclass
class RunConfig:
    """Everything a run needs. ``None`` entries in endpoints mean free."""

    data_dir: str
    variables: list
    dims: list
    y0: list
    yT: list
    tolerance: list = None
    match_tolerance: list = None
    T: float = None
    constraints: list = field(default_factory=list)
    cost: dict = field(default_factory=lambda: {"source": "explicit"})
    nu_max: float = 1.0
    bisection_iters: int = 20
    n_best: int = None
    weight_scheme: str = "uniform"
    user_weights: list = None
    shrinkage: float = 0.0
    rank_rtol: float = DEFAULT_RANK_RTOL
    grid_size: int = 200
    slack: float = 0.0
    confidence: float = 0.95
    target: dict = None
    output_dir: str = "output"
    seed: int = 0

    def __post_init__(self):
        D = len(self.variables)
        if D == 0:
            raise ConfigError("at least one variable is required")
        if TIME_COLUMN in self.variables:
            raise ConfigError(f"{TIME_COLUMN!r} cannot be a trajectory variable")
        if len(self.dims) != D or any(int(k) < 1 for k in self.dims):
            raise ConfigError("dims needs one positive entry per variable")
        for name in ("y0", "yT"):
            if len(getattr(self, name)) != D:
                raise ConfigError(f"{name} needs one entry per variable")
        if self.tolerance is not None and len(self.tolerance) != D:
            raise ConfigError("tolerance needs one entry per variable")
        if not self.nu_max > 0:
            raise ConfigError("nu_max must be positive")
        if self.T is not None and not self.T > 0:
            raise ConfigError("T must be positive")
        if self.cost.get("source") not in COST_SOURCES:
            raise ConfigError(f"cost.source must be one of {COST_SOURCES}")
        for c in self.constraints:
            if c.get("type") not in CONSTRAINT_TYPES:
                raise ConfigError(f"unknown constraint type {c.get('type')!r}")
            if c.get("variable") not in self.variables:
                raise ConfigError(f"constraint on unknown variable {c.get('variable')!r}")

    @property
    def D(self):
        return len(self.variables)

    def endpoint_conditions(self):
        nan = lambda v: [math.nan if x is None else float(x) for x in v]  # noqa: E731
        tol = [0.0] * self.D if self.tolerance is None else self.tolerance
        return EndpointConditions(nan(self.y0), nan(self.yT), tol)

    def matching_tolerance(self):
        """Tolerance used to accept reference files on their endpoints."""
        if self.match_tolerance is not None:
            return np.asarray(self.match_tolerance, dtype=float)
        tol = np.zeros(self.D) if self.tolerance is None else np.asarray(self.tolerance, float)
        return np.where(tol > 0, tol, 1e-6)

    def build_constraints(self):
        out = []
        for c in self.constraints:
            i = self.variables.index(c["variable"])
            bound = float(c["bound"])
            name = c.get("name") or f"{c['type']}:{c['variable']}"
            if c["type"] == "upper-bound":
                out.append(upper_bound(i, bound, name))
            elif c["type"] == "lower-bound":
                out.append(lower_bound(i, bound, name))
            else:
                out.append(derivative_upper_bound(i, bound, self.D, name))
        return out

    def to_dict(self):
        """Nested document form, the inverse of :func:`config_from_dict`."""
        return {
            "data": {"directory": self.data_dir, "variables": list(self.variables)},
            "basis": {"dims": [int(k) for k in self.dims], "T": self.T},
            "endpoints": {
                "y0": list(self.y0), "yT": list(self.yT), "tolerance": self.tolerance,
                "match_tolerance": self.match_tolerance,
            },
            "constraints": [dict(c) for c in self.constraints],
            "cost": dict(self.cost),
            "optimizer": {
                "nu_max": self.nu_max, "bisection_iters": self.bisection_iters,
                "n_best": self.n_best, "weight_scheme": self.weight_scheme,
                "user_weights": self.user_weights, "shrinkage": self.shrinkage,
                "rank_rtol": self.rank_rtol, "grid_size": self.grid_size,
                "slack": self.slack, "confidence": self.confidence,
            },
            "target": self.target,
            "output": {"directory": self.output_dir},
            "seed": self.seed,
        }


def config_from_dict(doc, base_dir=None):
    """Build a :class:`RunConfig` from the nested document form.

    Relative directories are resolved against ``base_dir``.
    """
    try:
        data = doc["data"]
        basis = doc.get("basis", {})
        ends = doc["endpoints"]
        opt = doc.get("optimizer", {})
        out = doc.get("output", {})
        cfg = RunConfig(
            data_dir=_resolve(data["directory"], base_dir),
            variables=list(data["variables"]),
            dims=[int(k) for k in basis["dims"]],
            T=None if basis.get("T") is None else float(basis["T"]),
            y0=list(ends["y0"]),
            yT=list(ends["yT"]),
            tolerance=ends.get("tolerance"),
            match_tolerance=ends.get("match_tolerance"),
            constraints=list(doc.get("constraints") or []),
            cost=dict(doc.get("cost") or {"source": "explicit"}),
            nu_max=float(opt.get("nu_max", 1.0)),
            bisection_iters=int(opt.get("bisection_iters", 20)),
            n_best=opt.get("n_best"),
            weight_scheme=opt.get("weight_scheme", "uniform"),
            user_weights=opt.get("user_weights"),
            shrinkage=float(opt.get("shrinkage", 0.0)),
            rank_rtol=float(opt.get("rank_rtol", DEFAULT_RANK_RTOL)),
            grid_size=int(opt.get("grid_size", 200)),
            slack=float(opt.get("slack", 0.0)),
            confidence=float(opt.get("confidence", 0.95)),
            target=doc.get("target"),
            output_dir=_resolve(out.get("directory", "output"), base_dir),
            seed=int(doc.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc!r}") from exc
    return cfg


def _resolve(path, base_dir):
    p = Path(path)
    if base_dir is not None and not p.is_absolute():
        p = Path(base_dir) / p
    return str(p)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} is not a mapping")
    return config_from_dict(doc, base_dir=path.parent)


def save_config(cfg, path):
    path = Path(path)
    doc = cfg.to_dict()
    with path.open("w", encoding="utf-8") as fh:
        if path.suffix == ".json":
            json.dump(doc, fh, indent=2)
        else:
            yaml.safe_dump(doc, fh, sort_keys=False)


# ---------------------------------------------------------------- ingestion

def read_trajectory_csv(path, variables, extra=()):
    """Read one reference file.

    Returns
    -------
    samples : TrajectorySamples
    extra_columns : dict
        Requested additional columns (e.g. a measured cost), by name.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read file: {exc}", path) from exc
    if not rows:
        raise IngestionError("empty file", path)
    header = [h.strip() for h in rows[0]]
    missing = [c for c in (TIME_COLUMN, *variables, *extra) if c not in header]
    if missing:
        raise IngestionError(f"missing column(s) {missing}", path)
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise IngestionError(f"parse failure: {exc}", path) from exc
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(header):
        raise IngestionError("need at least two complete data rows", path)
    col = {h: data[:, i] for i, h in enumerate(header)}
    t = col[TIME_COLUMN]
    if np.any(np.diff(t) <= 0):
        raise IngestionError("time column is not strictly increasing", path)
    values = np.column_stack([col[v] for v in variables])
    if not np.all(np.isfinite(values)):
        raise IngestionError("non-finite values", path)
    return TrajectorySamples(t - t[0], values, tuple(variables)), {c: col[c] for c in extra}


def write_trajectory_csv(path, samples, extra=None):
    extra = extra or {}
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([TIME_COLUMN, *samples.names, *extra])
        cols = [samples.times, *samples.values.T, *extra.values()]
        for row in zip(*cols):
            w.writerow([_fmt(x) for x in row])


def _fmt(x):
    return repr(float(x))


def hold_to(samples, T):
    """Extend a trajectory shorter than ``T`` by holding its last state."""
    if samples.times[-1] >= T:
        return samples
    times = np.append(samples.times, T)
    values = np.vstack([samples.values, samples.values[-1]])
    return TrajectorySamples(times, values, samples.names)


@dataclass
class IngestionReport:
    accepted: list = field(default_factory=list)
    rejected: dict = field(default_factory=dict)
    projection_rmse: dict = field(default_factory=dict)

    def as_dict(self):
        return {"accepted": list(self.accepted), "rejected": dict(self.rejected),
                "projection_rmse": dict(self.projection_rmse)}


def ingest(directory, cfg, extra=()):
    """Read every ``*.csv`` in ``directory`` and filter on endpoints.

    Returns ``(names, samples, extra_columns, report)`` in file-name order.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError("data directory does not exist", directory)
    files = sorted(directory.glob("*.csv"))
    conditions = cfg.endpoint_conditions()
    match_tol = cfg.matching_tolerance()
    report = IngestionReport()
    names, samples, extras = [], [], []
    for path in files:
        s, ex = read_trajectory_csv(path, cfg.variables, extra)
        if not conditions.matches(s, match_tol):
            report.rejected[path.name] = "endpoints outside tolerance"
            continue
        names.append(path.name)
        samples.append(s)
        extras.append(ex)
    if not samples:
        raise EmptyReferenceSetError(f"no reference accepted in {directory}")
    report.accepted = list(names)
    return names, samples, extras, report


def load_references(directory, cfg, basis=None):
    """Ingest a directory and project every accepted file onto the basis.

    ``basis`` defaults to one built from ``cfg`` (which then needs ``T``).
    """
    names, samples, _, report = ingest(directory, cfg)
    if basis is None:
        if cfg.T is None:
            raise ConfigError("T is required to project references")
        basis = build_basis("legendre", cfg.dims, cfg.T)
    C = _project_all(names, samples, basis, report)
    return ReferenceSet(C, labels=tuple(names)), samples, report


def _project_all(names, samples, basis, report):
    rows = []
    for name, s in zip(names, samples):
        c = project(hold_to(s, basis.T), basis)
        inside = s.times <= basis.T
        fitted = reconstruct(c, s.times[inside]).values
        report.projection_rmse[name] = float(np.sqrt(np.mean((fitted - s.values[inside]) ** 2)))
        rows.append(c.entries)
    return np.vstack(rows)


# ---------------------------------------------------------------- reporting

@dataclass(frozen=True)
class SavingsReport:
    absolute: np.ndarray
    percentage: np.ndarray

    @staticmethod
    def _stats(x):
        q1, q2, q3 = np.percentile(x, [25, 50, 75])
        return {
            "mean": float(np.mean(x)),
            "std": float(np.std(x, ddof=1)) if x.size > 1 else 0.0,
            "min": float(np.min(x)), "q1": float(q1), "q2": float(q2),
            "q3": float(q3), "max": float(np.max(x)),
        }

    def as_dict(self):
        return {"absolute": self._stats(self.absolute),
                "percentage": self._stats(self.percentage)}

    def table(self):
        head = f"{'':<12}" + "".join(f"{k:>10}" for k in ("Mean", "Std", "Min", "Q1", "Q2", "Q3", "Max"))
        lines = [head]
        for label, stats in (("Savings", self._stats(self.absolute)),
                             ("Percent", self._stats(self.percentage))):
            lines.append(f"{label:<12}" + "".join(f"{v:>10.2f}" for v in stats.values()))
        return "\n".join(lines)


def savings_report(opt_cost, reference_costs):
    """Per-reference saving ``ref - opt`` and its percentage of ``ref``."""
    ref = np.atleast_1d(np.asarray(reference_costs, dtype=float))
    if ref.size == 0:
        raise InvalidArgumentError("need at least one reference cost")
    if np.any(ref == 0):
        bad = np.flatnonzero(ref == 0).tolist()
        raise InvalidArgumentError(f"zero reference cost at index {bad}, percentage undefined")
    absolute = ref - opt_cost
    return SavingsReport(absolute, 100.0 * absolute / ref)


def find_first_hit(samples, targets, tolerances=0.0):
    """First sample time where every targeted variable is within tolerance.

    Parameters
    ----------
    targets : dict
        Column index -> target value.
    """
    idx = list(targets)
    goal = np.array([targets[i] for i in idx], dtype=float)
    tol = np.broadcast_to(np.asarray(tolerances, dtype=float), goal.shape)
    hit = np.all(np.abs(samples.values[:, idx] - goal) <= tol, axis=1)
    if not np.any(hit):
        return None
    return float(samples.times[int(np.argmax(hit))])


# -------------------------------------------------------------------- runs

@dataclass
class RunResult:
    config: RunConfig
    estimator: ReferenceTrajectoryOptimizer
    trajectory: TrajectorySamples
    instantaneous_cost: np.ndarray
    reference_costs: np.ndarray
    savings: SavingsReport
    constraint_report: object
    confidence_interval: tuple
    t_star: float
    ingestion: IngestionReport
    reference_samples: list
    reference_names: list
    cost_fit: dict = None

    def summary(self):
        est = self.estimator
        sol = est.solution_
        dec = est.decomposition_
        diag = dict(sol.diagnostics)
        diag["bisection"] = [[float(n), bool(ok)] for n, ok in diag.get("bisection", [])]
        return _jsonable({
            "nu": est.nu_,
            "kappa": None if est.nu_ == 0 else 1.0 / est.nu_,
            "objective": sol.objective,
            "cost": est.cost_,
            "penalty": sol.penalty,
            "coefficients": sol.c.tolist(),
            "weyl": est.weyl_.as_dict(),
            "decomposition": {
                "sigma": dec.sigma, "a": dec.a, "c2_spread": dec.c2_spread,
                "commutation_residual": dec.diagnostics.get("commutation_residual"),
            },
            "constraints": self.constraint_report.as_dict(),
            "endpoint_residual": est.endpoint_system_.residual(sol.c).tolist(),
            "savings": self.savings.as_dict(),
            "confidence_interval": None if self.confidence_interval is None
            else list(self.confidence_interval),
            "t_star": self.t_star,
            "best_references": [self.reference_names[i] for i in est.best_index_],
            "reference_costs": dict(zip(self.reference_names, self.reference_costs.tolist())),
            "ingestion": self.ingestion.as_dict(),
            "cost_fit": self.cost_fit,
            "diagnostics": diag,
            "config": self.config.to_dict(),
        })


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _build_cost(cfg, samples, extras):
    src = cfg.cost["source"]
    if src == "explicit":
        return QuadraticInstantaneousCost(cfg.cost["Q"], cfg.cost["w"], cfg.cost.get("r", 0.0)), None
    if src == "force-field":
        return ForceFieldSpec(cfg.cost["M"], cfg.cost["b"], cfg.cost.get("alpha", 0.0)), None
    column = cfg.cost.get("column")
    if column is None:
        raise ConfigError("cost.column is required for a fitted cost")
    X = np.vstack([s.values for s in samples])
    y = np.concatenate([e[column] for e in extras])
    fit = fit_quadratic_cost(X, y)
    out = fit.to_dict()
    out["state_range"] = np.column_stack([X.min(axis=0), X.max(axis=0)]).tolist()
    return fit.cost, out


def _extrapolation(traj, fit):
    """How far the trajectory leaves the per-variable range of the fit data."""
    rng = np.asarray(fit["state_range"])
    below = np.maximum(rng[:, 0] - traj.values.min(axis=0), 0.0)
    above = np.maximum(traj.values.max(axis=0) - rng[:, 1], 0.0)
    return np.maximum(below, above)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except ReftrajError as exc:
        raise StageError(name, exc) from exc


def run_optimization(cfg):
    """Ingest, optimize, report and write outputs; returns a :class:`RunResult`."""
    column = cfg.cost.get("column") if cfg.cost.get("source") == "fitted" else None
    extra = () if column is None else (column,)
    names, samples, extras, report = _stage("ingest", ingest, cfg.data_dir, cfg, extra)
    cost, fit = _stage("cost", _build_cost, cfg, samples, extras)

    T = cfg.T
    if T is None:
        T = _stage("horizon", _default_horizon, cfg, samples, cost)
    basis = build_basis("legendre", cfg.dims, T)
    C = _stage("project", _project_all, names, samples, basis, report)

    constraints = cfg.build_constraints()
    est = ReferenceTrajectoryOptimizer(
        dims=tuple(cfg.dims), T=T, endpoints=cfg.endpoint_conditions(), cost=cost,
        constraints=constraints, nu_max=cfg.nu_max, n_bisection=cfg.bisection_iters,
        n_best=cfg.n_best, weight_scheme=cfg.weight_scheme, user_weights=cfg.user_weights,
        shrinkage=cfg.shrinkage, rank_rtol=cfg.rank_rtol, grid_size=cfg.grid_size,
        admissibility_slack=cfg.slack,
    )
    _stage("tune_nu", est.fit, C)

    grid = np.linspace(0.0, T, cfg.grid_size)
    traj = reconstruct(est.coefficient_vector_, grid, tuple(cfg.variables))
    inst = _instantaneous(cost, est.coefficient_vector_, traj)
    creport = check_constraints(traj, ConstraintSet(tuple(constraints), cfg.grid_size), cfg.slack)
    if fit is not None:
        gap = _extrapolation(traj, fit)
        fit["extrapolation"] = dict(zip(cfg.variables, gap.tolist()))
        width = np.ptp(np.asarray(fit["state_range"]), axis=1)
        far = gap > 0.01 * width
        if np.any(far):
            logger.warning("optimized trajectory leaves the fitted cost's data range: %s",
                           ", ".join(f"{v} by {g:.4g}" for v, g, f in zip(cfg.variables, gap, far) if f))
    savings = _stage("report", savings_report, est.cost_, est.reference_costs_)

    ci = None
    sigma = cfg.cost.get("sigma", fit["residual_std"] if fit else None)
    if sigma is not None:
        ci = confidence_interval(est.cost_, CostNoiseModel(float(sigma), T), cfg.confidence)

    t_star = None
    targets, tols = _targets(cfg)
    if targets:
        dense = reconstruct(est.coefficient_vector_, np.linspace(0.0, T, max(cfg.grid_size, 1001)))
        t_star = find_first_hit(dense, targets, tols)

    result = RunResult(
        config=cfg, estimator=est, trajectory=traj, instantaneous_cost=inst,
        reference_costs=est.reference_costs_, savings=savings, constraint_report=creport,
        confidence_interval=ci, t_star=t_star, ingestion=report,
        reference_samples=samples, reference_names=names, cost_fit=fit,
    )
    _stage("output", emit_outputs, result, cfg.output_dir)
    return result


def _default_horizon(cfg, samples, cost):
    """Longest duration among the cheapest ``n_best`` references.

    Each reference is ranked by its cost over its own duration.
    """
    own = []
    for s in samples:
        b = build_basis("legendre", cfg.dims, s.duration)
        c = project(s, b)
        F = assemble_forcefield(cost, b) if isinstance(cost, ForceFieldSpec) else assemble_quadratic(cost, b)
        own.append(float(F(c.entries)))
    n_best = len(samples) if cfg.n_best is None else int(cfg.n_best)
    best = np.argsort(own, kind="stable")[:n_best]
    return max(samples[i].duration for i in best)


def _instantaneous(cost, c, traj):
    if isinstance(cost, ForceFieldSpec):
        return cost.integrand(traj.values, reconstruct_derivative(c, traj.times))
    return cost(traj.values)


def _targets(cfg):
    if cfg.target is not None:
        variables = cfg.target["variables"]
        idx = [cfg.variables.index(v) for v in variables]
        values = cfg.target.get("values") or [cfg.yT[i] for i in idx]
        tol = cfg.target.get("tolerance", 0.0)
        return dict(zip(idx, map(float, values))), tol
    return {}, 0.0


def emit_outputs(result, directory):
    """Write ``trajectory.csv``, ``summary.json`` and ``plot_data.csv``."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(out / "trajectory.csv", result.trajectory,
                             {"cost_rate": result.instantaneous_cost})
        text = json.dumps(result.summary(), indent=2, sort_keys=True)
        (out / "summary.json").write_text(text + "\n", encoding="utf-8")
        _write_plot_data(out / "plot_data.csv", result)
    except OSError as exc:
        raise IngestionError(f"cannot write outputs: {exc}", exc.filename or out) from exc
    return [out / "trajectory.csv", out / "summary.json", out / "plot_data.csv"]


def _write_plot_data(path, result):
    best = set(result.estimator.best_index_.tolist())
    names = result.trajectory.names
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["series", "selected", TIME_COLUMN, *names])
        for t, row in zip(result.trajectory.times, result.trajectory.values):
            w.writerow(["optimized", 1, _fmt(t), *map(_fmt, row)])
        for i, (label, s) in enumerate(zip(result.reference_names, result.reference_samples)):
            flag = int(i in best)
            for t, row in zip(s.times, s.values):
                w.writerow([label, flag, _fmt(t), *map(_fmt, row)])


def load_summary(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read summary: {exc}", path) from exc


def summary_to_text(summary):
    """Human-readable digest of a run summary."""
    lines = [
        f"nu* = {summary['nu']:.6g}   cost = {summary['cost']:.6g}   "
        f"penalty = {summary['penalty']:.6g}",
        f"admissible: {summary['constraints']['admissible']}",
    ]
    if summary.get("t_star") is not None:
        lines.append(f"T* = {summary['t_star']:.6g}")
    if summary.get("confidence_interval"):
        lo, hi = summary["confidence_interval"]
        lines.append(f"cost interval: [{lo:.6g}, {hi:.6g}]")
    head = f"{'':<12}" + "".join(f"{k:>10}" for k in ("Mean", "Std", "Min", "Q1", "Q2", "Q3", "Max"))
    lines.append(head)
    for label, key in (("Savings", "absolute"), ("Percent", "percentage")):
        stats = summary["savings"][key]
        lines.append(f"{label:<12}" + "".join(
            f"{stats[k]:>10.2f}" for k in ("mean", "std", "min", "q1", "q2", "q3", "max")))
    return "\n".join(lines)


def write_references(directory, refs, basis, names, n_samples=201, extra=None, prefix="ref"):
    """Write each reference as a CSV sampled on ``n_samples`` uniform times.

    ``extra`` maps a column name to ``f(samples) -> ndarray``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    times = np.linspace(0.0, basis.T, n_samples)
    paths = []
    for i, c in enumerate(refs.coefficients):
        s = reconstruct(CoefficientVector(c, basis), times, tuple(names))
        cols = {k: f(s, i) for k, f in (extra or {}).items()}
        p = directory / f"{prefix}_{i:04d}.csv"
        write_trajectory_csv(p, s, cols)
        paths.append(p)
    return paths


__all__ = [
    "RunConfig", "RunResult", "SavingsReport", "IngestionReport",
    "config_from_dict", "load_config", "save_config", "load_references", "ingest",
    "read_trajectory_csv", "write_trajectory_csv", "run_optimization", "savings_report",
    "find_first_hit", "emit_outputs", "load_summary", "summary_to_text", "write_references",
]

