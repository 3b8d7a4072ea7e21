import csv
import json
import shutil

import numpy as np
import pytest
import yaml

from reftraj.cli import generate_scenario
from reftraj.exceptions import (
    ConfigError,
    EmptyReferenceSetError,
    IngestionError,
    InvalidArgumentError,
    StageError,
)
from reftraj.pipeline import (
    RunConfig,
    config_from_dict,
    find_first_hit,
    hold_to,
    load_config,
    load_references,
    load_summary,
    read_trajectory_csv,
    run_optimization,
    savings_report,
    write_trajectory_csv,
)
from reftraj.trajectory import TrajectorySamples


def test_savings_example():
    rep = savings_report(90.0, [100.0, 200.0])
    np.testing.assert_allclose(rep.absolute, [10, 110])
    np.testing.assert_allclose(rep.percentage, [10, 55])
    assert rep.as_dict()["percentage"]["mean"] == pytest.approx(32.5)


def test_savings_all_zero():
    rep = savings_report(5.0, [5.0, 5.0, 5.0])
    stats = rep.as_dict()
    assert all(v == 0 for v in stats["absolute"].values())
    assert all(v == 0 for v in stats["percentage"].values())


def test_savings_statistics_layout():
    rep = savings_report(0.0, [1.0, 2.0, 3.0, 4.0, 5.0])
    s = rep.as_dict()["absolute"]
    assert list(s) == ["mean", "std", "min", "q1", "q2", "q3", "max"]
    assert (s["q1"], s["q2"], s["q3"]) == (2.0, 3.0, 4.0)
    assert s["std"] == pytest.approx(np.std([1, 2, 3, 4, 5], ddof=1))
    header = rep.table().splitlines()[0].split()
    assert header == ["Mean", "Std", "Min", "Q1", "Q2", "Q3", "Max"]


def test_savings_errors():
    with pytest.raises(InvalidArgumentError):
        savings_report(1.0, [])
    with pytest.raises(InvalidArgumentError, match="index"):
        savings_report(1.0, [2.0, 0.0])


def test_first_hit_examples():
    s = TrajectorySamples([0, 1, 2, 3], [[0.0], [5.0], [10.0], [10.0]])
    assert find_first_hit(s, {0: 10.0}, 0.0) == 2.0
    assert find_first_hit(s, {0: 11.0}, 0.0) is None
    joint = TrajectorySamples([0, 1, 2, 3], [[0, 0.3], [5, 0.5], [10, 0.7], [10, 0.78]])
    assert find_first_hit(joint, {0: 10.0, 1: 0.78}, [0.0, 0.0]) == 3.0


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _line_file(path, start, end, n=201):
    t = np.linspace(0, 1, n)
    _write(path, ["time", "x"], zip(t, start + (end - start) * t))


def _line_config(tmp_path, **kw):
    params = dict(data_dir=str(tmp_path), variables=["x"], dims=[3], y0=[0.0], yT=[1.0],
                  tolerance=[0.01], T=1.0,
                  cost={"source": "explicit", "Q": [[1.0]], "w": [0.0], "r": 0.0})
    params.update(kw)
    return RunConfig(**params)


def test_endpoint_filter_keeps_matching_files(tmp_path):
    _line_file(tmp_path / "a.csv", 0.0, 1.0)
    _line_file(tmp_path / "b.csv", 0.005, 0.995)
    _line_file(tmp_path / "c.csv", 0.2, 1.0)
    refs, samples, report = load_references(tmp_path, _line_config(tmp_path))
    assert refs.labels == ("a.csv", "b.csv")
    assert len(samples) == 2
    assert list(report.rejected) == ["c.csv"]
    assert set(report.projection_rmse) == {"a.csv", "b.csv"}
    assert max(report.projection_rmse.values()) <= 1e-8


def test_missing_time_column_names_file(tmp_path):
    _write(tmp_path / "bad.csv", ["t", "x"], [[0, 0], [1, 1]])
    with pytest.raises(IngestionError, match="bad.csv"):
        load_references(tmp_path, _line_config(tmp_path))


def test_unsorted_time_rejected(tmp_path):
    _write(tmp_path / "u.csv", ["time", "x"], [[0, 0], [0.6, 1], [0.5, 1]])
    with pytest.raises(IngestionError, match="increasing"):
        load_references(tmp_path, _line_config(tmp_path))


def test_parse_failure(tmp_path):
    _write(tmp_path / "p.csv", ["time", "x"], [[0, 0], [1, "abc"]])
    with pytest.raises(IngestionError, match="parse"):
        load_references(tmp_path, _line_config(tmp_path))


def test_no_accepted_reference(tmp_path):
    _line_file(tmp_path / "c.csv", 0.5, 1.0)
    with pytest.raises(EmptyReferenceSetError):
        load_references(tmp_path, _line_config(tmp_path))
    with pytest.raises(IngestionError):
        load_references(tmp_path / "missing", _line_config(tmp_path))


def test_csv_round_trip(tmp_path):
    s = TrajectorySamples([0.0, 0.5, 1.25], [[1.0, 2.0], [3.0, 4.0], [5.0, 1 / 3]], ("a", "b"))
    write_trajectory_csv(tmp_path / "s.csv", s, {"f": np.array([1.0, 2.0, 3.0])})
    back, extra = read_trajectory_csv(tmp_path / "s.csv", ["a", "b"], ["f"])
    np.testing.assert_array_equal(back.values, s.values)
    np.testing.assert_array_equal(extra["f"], [1.0, 2.0, 3.0])


def test_short_reference_is_held():
    s = TrajectorySamples([0, 1], [[0.0], [2.0]])
    held = hold_to(s, 3.0)
    assert held.times[-1] == 3.0 and held.values[-1, 0] == 2.0
    assert hold_to(s, 0.5) is s


@pytest.mark.parametrize("change, match", [
    ({"dims": [0]}, "dims"),
    ({"y0": [0.0, 1.0]}, "y0"),
    ({"nu_max": 0.0}, "nu_max"),
    ({"cost": {"source": "oracle"}}, "cost.source"),
    ({"constraints": [{"type": "upper-bound", "variable": "z", "bound": 1}]}, "unknown variable"),
    ({"constraints": [{"type": "between", "variable": "x", "bound": 1}]}, "constraint type"),
])
def test_config_validation(tmp_path, change, match):
    with pytest.raises(ConfigError, match=match):
        _line_config(tmp_path, **change)


def test_config_document_round_trip(tmp_path):
    cfg = _line_config(tmp_path, constraints=[{"type": "upper-bound", "variable": "x", "bound": 2}])
    again = config_from_dict(cfg.to_dict())
    assert again == cfg
    (tmp_path / "c.yaml").write_text("- not\n- a mapping\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "c.yaml")
    (tmp_path / "d.yaml").write_text("data: {variables: [x]}\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "d.yaml")


@pytest.fixture(scope="module")
def forcefield_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("ff")
    generate_scenario("forcefield", root, seed=0, alpha=1.0)
    return root


def _run(root, out_name="results", **overrides):
    cfg = load_config(root / "config.yaml")
    cfg.output_dir = str(root / out_name)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg, run_optimization(cfg)


def test_forcefield_run_outputs(forcefield_dir):
    cfg, result = _run(forcefield_dir)
    out = forcefield_dir / "results"
    assert result.constraint_report.admissible
    y = result.trajectory.values
    assert y.min() >= 0 and y.max() <= 1
    assert len(result.reference_names) == 122
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time", "x1", "x2", "cost_rate"]
    assert len(rows) - 1 == cfg.grid_size
    with open(out / "plot_data.csv") as fh:
        plot = list(csv.DictReader(fh))
    series = {r["series"] for r in plot}
    assert "optimized" in series and len(series) == 123
    summary = load_summary(out / "summary.json")
    assert json.loads(json.dumps(summary, sort_keys=True)) == summary
    assert summary["nu"] == pytest.approx(result.estimator.nu_)
    assert set(summary["savings"]) == {"absolute", "percentage"}
    assert summary["weyl"]["kappa_min"] >= 0
    assert len(summary["ingestion"]["projection_rmse"]) == 122


def test_runs_are_byte_identical(forcefield_dir):
    _run(forcefield_dir, "rerun")
    a = (forcefield_dir / "rerun" / "summary.json").read_bytes()
    _run(forcefield_dir, "rerun")
    b = (forcefield_dir / "rerun" / "summary.json").read_bytes()
    assert a == b


def test_impossible_constraints_surface_stage(forcefield_dir):
    bad = [{"type": "upper-bound", "variable": "x1", "bound": -0.5}]
    with pytest.raises(StageError) as info:
        _run(forcefield_dir, "bad", constraints=bad)
    assert info.value.stage == "tune_nu"
    assert info.value.exit_code == 4


def test_climb_run(tmp_path):
    generate_scenario("climb", tmp_path, seed=0)
    doc = yaml.safe_load((tmp_path / "config.yaml").read_text())
    assert doc["cost"]["source"] == "fitted"
    cfg, result = _run(tmp_path)
    est = result.estimator
    assert result.constraint_report.admissible
    assert est.basis_.K == 20
    assert est.basis_.T == pytest.approx(1200.0)
    assert est.cost_ < est.reference_costs_[est.best_index_].min()
    assert result.confidence_interval is not None
    lo, hi = result.confidence_interval
    assert lo < est.cost_ < hi
    assert result.t_star is not None and 0 < result.t_star <= 1200.0
    assert result.cost_fit["residual_std"] == pytest.approx(0.02, rel=0.1)
    assert set(result.cost_fit["extrapolation"]) == {"altitude", "mach", "n1"}
    n1 = result.trajectory.values[:, 2]
    assert n1.min() >= 85.0 - 1e-9 and n1.max() <= 100.0 + 1e-9
    summary = load_summary(tmp_path / "results" / "summary.json")
    assert len(summary["cost_fit"]["state_range"]) == 3


def test_default_horizon_uses_best_references(tmp_path):
    # three straight lines, the slowest is also the cheapest under f = x^2
    for name, T in (("a", 1.0), ("b", 2.0), ("c", 4.0)):
        t = np.linspace(0, T, 201)
        _write(tmp_path / f"{name}.csv", ["time", "x"], zip(t, t / T))
    cfg = _line_config(tmp_path, T=None, n_best=1, tolerance=[1e-6],
                       cost={"source": "explicit", "Q": [[-1.0]], "w": [0.0], "r": 0.0},
                       output_dir=str(tmp_path / "out"), dims=[2], nu_max=1e-6)
    result = run_optimization(cfg)
    assert result.estimator.basis_.T == pytest.approx(4.0)


def test_fitted_cost_requires_column(tmp_path, forcefield_dir):
    shutil.copy(forcefield_dir / "references" / "ref_0000.csv", tmp_path / "r.csv")
    cfg = load_config(forcefield_dir / "config.yaml")
    cfg.data_dir = str(tmp_path)
    cfg.cost = {"source": "fitted"}
    cfg.output_dir = str(tmp_path / "out")
    with pytest.raises(StageError) as info:
        run_optimization(cfg)
    assert info.value.exit_code == 2
