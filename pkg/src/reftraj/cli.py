"""Command-line interface.

Exit codes: 0 success, 2 configuration or argument error, 3 ingestion or
output error, 4 no admissible solution, 5 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datagen
from .basis import build_basis
from .cost import fit_quadratic_cost
from .exceptions import ConfigError, IngestionError, ReftrajError
from .pipeline import (
    RunConfig,
    load_config,
    load_summary,
    read_trajectory_csv,
    run_optimization,
    save_config,
    summary_to_text,
    write_references,
)
from .trajectory import project, reconstruct

logger = logging.getLogger("reftraj")

CLIMB_FUEL_NOISE = 0.02  # kg/s, white noise added to the synthetic fuel-flow column


def _cmd_optimize(args):
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    result = run_optimization(cfg)
    print(summary_to_text(load_summary(Path(cfg.output_dir) / "summary.json")))
    print(f"outputs written to {cfg.output_dir}")
    return 0 if result.constraint_report.admissible else 4


def _cmd_project(args):
    basis = build_basis("legendre", args.dims, args.T)
    if len(args.variables) != basis.D:
        raise ConfigError("one dims entry per variable is required")
    out = {}
    for path in args.files:
        s, _ = read_trajectory_csv(path, args.variables)
        c = project(s, basis)
        inside = s.times <= basis.T
        fitted = reconstruct(c, s.times[inside]).values
        rmse = float(np.sqrt(np.mean((fitted - s.values[inside]) ** 2)))
        out[Path(path).name] = {"coefficients": c.entries.tolist(), "rmse": rmse}
    _emit_json({"dims": list(args.dims), "T": args.T, "variables": args.variables,
                "trajectories": out}, args.output)
    return 0


def _cmd_fit_cost(args):
    files = sorted(Path(args.data).glob("*.csv"))
    if not files:
        raise IngestionError("no CSV files", args.data)
    X, y = [], []
    for path in files:
        s, extra = read_trajectory_csv(path, args.variables, (args.column,))
        X.append(s.values)
        y.append(extra[args.column])
    fit = fit_quadratic_cost(np.vstack(X), np.concatenate(y))
    _emit_json(fit.to_dict(), args.output)
    return 0


def _cmd_report(args):
    print(summary_to_text(load_summary(args.summary)))
    return 0


def _emit_json(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def generate_scenario(name, directory, seed=0, alpha=0.0, n_samples=201):
    """Write a scenario's reference CSVs and a ready-to-run ``config.yaml``.

    Returns the path of the config file.
    """
    directory = Path(directory)
    data_dir = directory / "references"
    if name == "forcefield":
        sc = datagen.forcefield_scenario(alpha=alpha, seed=seed)
        write_references(data_dir, sc.references, sc.basis, sc.names, n_samples)
        cost = {"source": "force-field", **sc.cost.to_dict()}
        constraints = [
            {"type": kind, "variable": v, "bound": bound}
            for v in sc.names for kind, bound in (("lower-bound", 0.0), ("upper-bound", 1.0))
        ]
        tol = [1e-4, 1e-4]
        T = sc.basis.T
        target = None
    elif name == "climb":
        sc = datagen.climb_scenario(seed=seed)

        def fuel(samples, i):
            rng = np.random.default_rng([seed, i])
            return sc.cost(samples.values) + rng.normal(0.0, CLIMB_FUEL_NOISE, len(samples.times))

        write_references(data_dir, sc.references, sc.basis, sc.names, n_samples,
                         extra={"fuel_flow": fuel})
        cost = {"source": "fitted", "column": "fuel_flow"}
        constraints = [
            {"type": "upper-bound", "variable": "mach", "bound": sc.settings["mmo"], "name": "mmo"},
            {"type": "derivative-upper-bound", "variable": "altitude",
             "bound": sc.settings["max_rate"], "name": "max-rate-of-climb"},
        ]
        # Flight envelope. The fitted fuel model is only trustworthy near the
        # recorded states, and N1 has free endpoints, so without these the
        # optimizer can follow the fitted surface far outside the data.
        lo, hi = (b.copy() for b in datagen.CLIMB_BOX)
        lo[2], hi[2] = datagen.CLIMB_THRUST_BAND
        for d, v in enumerate(sc.names):
            constraints.append({"type": "lower-bound", "variable": v, "bound": float(lo[d])})
            if v != "mach":
                constraints.append({"type": "upper-bound", "variable": v, "bound": float(hi[d])})
        tol = [100.0, 0.01, 0.0]
        T = None
        target = {"variables": ["altitude", "mach"], "tolerance": [100.0, 0.01]}
    else:
        raise ConfigError(f"unknown scenario {name!r}")

    def listed(v):
        return [None if np.isnan(x) else float(x) for x in v]

    cfg = RunConfig(
        data_dir="references",
        variables=list(sc.names),
        dims=list(sc.basis.dims),
        T=T,
        y0=listed(sc.conditions.y0),
        yT=listed(sc.conditions.yT),
        tolerance=tol,
        constraints=constraints,
        cost=_plain(cost),
        nu_max=float(sc.settings["nu_max"]),
        n_best=int(sc.settings["n_best"]),
        rank_rtol=float(sc.settings.get("rank_rtol", 1e-10)),
        target=target,
        output_dir="results",
        seed=seed,
    )
    path = directory / "config.yaml"
    save_config(cfg, path)
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _cmd_generate(args):
    path = generate_scenario(args.scenario, args.output, args.seed, args.alpha, args.samples)
    print(f"wrote {path}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="reftraj", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("optimize", help="run a full optimization from a config file")
    o.add_argument("--config", required=True)
    o.add_argument("--output-dir")
    o.set_defaults(func=_cmd_optimize)

    pr = sub.add_parser("project", help="project CSV trajectories onto the basis")
    pr.add_argument("files", nargs="+")
    pr.add_argument("--variables", nargs="+", required=True)
    pr.add_argument("--dims", nargs="+", type=int, required=True)
    pr.add_argument("--T", type=float, required=True)
    pr.add_argument("--output")
    pr.set_defaults(func=_cmd_project)

    f = sub.add_parser("fit-cost", help="fit a quadratic instantaneous cost to a CSV column")
    f.add_argument("--data", required=True)
    f.add_argument("--variables", nargs="+", required=True)
    f.add_argument("--column", required=True)
    f.add_argument("--output")
    f.set_defaults(func=_cmd_fit_cost)

    g = sub.add_parser("generate", help="write a synthetic scenario")
    g.add_argument("--scenario", choices=("forcefield", "climb"), required=True)
    g.add_argument("--output", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--alpha", type=float, default=0.0, help="kinetic weight (forcefield only)")
    g.add_argument("--samples", type=int, default=201, help="samples per reference file")
    g.set_defaults(func=_cmd_generate)

    r = sub.add_parser("report", help="print a run summary")
    r.add_argument("--summary", required=True)
    r.set_defaults(func=_cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ReftrajError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
