import filecmp
import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from idlegrad import experiments as ex


def tiny(**kw):
    cfg = {
        "kind": "monte_carlo", "seed": 2, "replicas": 3,
        "graph": {"kind": "rgg", "n": 8, "radius": 0.6},
        "weights": {"kind": "metropolis"},
        "data": {"kind": "synthetic", "per_node": 2, "dim_minus_1": 2, "noise_sd": 0.1},
        "cost": {"R": 0.1, "lipschitz": "pooled"},
        "constraint": {"kind": "ball", "radius": 20.0},
        "alpha": {"rule": "inverse_L", "c": 10},
        "schedule": {"kind": "geometric", "delta": "auto"},
        "algorithms": ["standard", "idling"],
        "metric": "rel_err", "target": 0.05, "max_iter": 120,
        "init": {"mode": "uniform", "scale": 5.0},
        "record_error": True,
    }
    cfg.update(kw)
    return cfg


@pytest.mark.parametrize("patch, path", [
    ({"kind": "bogus"}, "$.kind"),
    ({"seed": -1}, "$.seed"),
    ({"replicas": 0}, "$.replicas"),
    ({"graph": {"kind": "rgg", "n": 8}}, "$.graph"),
    ({"graph": {"kind": "star", "n": 8}}, "$.graph.kind"),
    ({"alpha": {"rule": "inverse_L"}}, "$.alpha.c"),
    ({"algorithms": ["idling", "teleport"]}, "$.algorithms[1]"),
    ({"algorithms": ["async:zz"]}, "$.algorithms[0]"),
    ({"metric": "accuracy"}, "$.metric"),
    ({"data": {"kind": "libsvm", "path": "/nonexistent.libsvm"}}, "$.data.path"),
    ({"init": {"mode": "random"}}, "$.init.mode"),
])
def test_validation_names_the_field(patch, path):
    with pytest.raises(ex.ConfigError) as info:
        ex.validate_config(tiny(**patch))
    assert info.value.path == path


def test_preset_with_overrides_and_conflicts():
    cfg = ex.validate_config({"preset": "fig1", "replicas": 7})
    assert cfg["replicas"] == 7 and cfg["name"] == "fig1"
    with pytest.raises(ex.ConfigError, match="either a preset"):
        ex.validate_config({"preset": "fig1", "kind": "monte_carlo"})
    with pytest.raises(ex.ConfigError, match="unknown preset"):
        ex.preset("fig9")


def test_preset_contents():
    assert ex.preset("fig1")["alpha"] == {"rule": "inverse_L", "c": 50}
    assert ex.preset("fig2")["alpha"]["c"] == 250
    assert ex.preset("fig3c")["async"]["link_prob"] == 0.5
    cfg = ex.validate_config(ex.preset("table1"))
    setup = ex.table1_setup(cfg, 0.01)
    assert setup.c0 == 1 / 8
    assert setup.theta == pytest.approx(1 / (setup.c0 * setup.lambda2_L))
    for name in ex.PRESETS:
        ex.validate_config(ex.preset(name))


@pytest.mark.parametrize("values, bins, counts", [
    ([1, 1, 1], 1, [3]), ([0, 1, 2, 3], 2, [2, 2])])
def test_histogram_vectors(values, bins, counts):
    assert ex.histogram(values, bins)[1].tolist() == counts


@given(values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200),
       bins=st.integers(1, 30))
def test_histogram_counts_everything(values, bins):
    edges, counts = ex.histogram(values, bins)
    assert counts.sum() == len(values)
    assert len(edges) == bins + 1


def test_histogram_errors():
    with pytest.raises(ValueError):
        ex.histogram([])
    with pytest.raises(ValueError):
        ex.histogram([1.0], 0)


def test_single_standard_replica_aggregate_is_the_trace():
    cfg = ex.validate_config(tiny(algorithms=["standard"], replicas=1))
    report, traces, _ = ex.run_monte_carlo(cfg)
    agg = ex.aggregate(traces["standard"])
    for col, v in agg.items():
        np.testing.assert_array_equal(v, traces["standard"][0][col])


def test_bundle_contents(tmp_path):
    out = tmp_path / "b"
    report = ex.run_experiment(tiny(), str(out))
    files = set(os.listdir(out))
    assert {"report.json", "aggregate_standard.csv", "aggregate_idling.csv",
            "hist_idling_costs.csv"} <= files
    assert sorted(os.listdir(out / "traces")) == sorted(
        ["standard_r0.csv"] + [f"idling_r{i}.csv" for i in range(3)])
    saved = json.loads((out / "report.json").read_text())
    assert saved["schema_version"] == ex.SCHEMA_VERSION
    std, idl = report["algorithms"]["standard"], report["algorithms"]["idling"]
    if "savings_percent" in report:
        assert report["savings_percent"] == pytest.approx(
            100 * (1 - idl["mean_cost"] / std["mean_cost"]))
    counts = np.loadtxt(out / "hist_idling_costs.csv", delimiter=",", skiprows=1)[:, 2]
    assert counts.sum() == idl["hits"]
    assert all(report["checks"].values())


def test_same_seed_gives_identical_bundles(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    ex.run_experiment(tiny(), str(a))
    ex.run_experiment(tiny(), str(b))
    cmp = filecmp.dircmp(a, b)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    assert not filecmp.dircmp(a / "traces", b / "traces").diff_files


def test_workers_do_not_change_results():
    cfg = ex.validate_config(tiny(algorithms=["idling"], record_error=False))
    serial = ex.run_monte_carlo(cfg)[1]["idling"]
    cfg["workers"] = 2
    parallel = ex.run_monte_carlo(cfg)[1]["idling"]
    for s, p in zip(serial, parallel):
        np.testing.assert_array_equal(s["total_cost"], p["total_cost"])
        np.testing.assert_array_equal(s["rel_err"], p["rel_err"])


def test_libsvm_config_with_bundled_fixture():
    cfg = tiny(data={"kind": "libsvm", "path": None, "dim_minus_1": 119},
               cost={"R": 0.1, "lipschitz": "per_node"}, metric="avg_cost", target=None,
               graph={"kind": "path", "n": 5}, replicas=1, max_iter=5,
               algorithms=["idling"], init={"mode": "zero"}, record_error=False)
    report = ex.run_experiment(cfg)
    assert "not-a1a" in report["data_source"]


def test_libsvm_config_with_file(fixtures_dir):
    cfg = tiny(data={"kind": "libsvm", "path": os.path.join(fixtures_dir, "ten_lines.libsvm"),
                     "dim_minus_1": 10},
               metric="avg_cost", target=None, graph={"kind": "path", "n": 2}, replicas=1,
               max_iter=5, algorithms=["standard"], record_error=False)
    report = ex.run_experiment(cfg)
    assert report["data_source"].endswith("ten_lines.libsvm")


def test_async_scenarios_split_nodes_by_index():
    cfg = ex.validate_config(ex.preset("fig3c"))
    net = ex.build_network(cfg["graph"], cfg["seed"])
    acfg = ex.async_config(cfg, net, "hi")
    assert np.all(acfg.grad_success_prob[:25] == 0.9)
    assert np.all(acfg.grad_success_prob[25:] == 0.1)
    assert np.all(acfg.link_up_prob == 0.5)


def test_bounds_report_serializes_infinity():
    rep = ex.bounds_report({"preset": "fig2"})
    text = json.dumps(rep)
    assert "Infinity" not in text and "NaN" not in text
    assert rep["schema_version"] == ex.SCHEMA_VERSION


def test_remark2_report():
    rep = ex.run_experiment(ex.preset("remark2"))
    for row in rep["rows"]:
        assert row["max_relative_deviation"] < 1e-12
