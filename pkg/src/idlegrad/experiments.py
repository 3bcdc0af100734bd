"""Config-driven experiment orchestration: presets, Monte-Carlo runs, outputs.

A config is a JSON-compatible dict. :func:`validate_config` fills defaults
and raises :class:`ConfigError` naming the offending field path.
"""
from __future__ import annotations

import copy
import csv
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import costs, data, engine, graph, oracle
from . import schedule as sch
from .kernels import BACKEND

SCHEMA_VERSION = 1
HIST_BINS = 20
A1A_URL = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/a1a"


class ConfigError(ValueError):
    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path


# ---------------------------------------------------------------- presets

def _synthetic_base():
    return {
        "kind": "monte_carlo",
        "seed": 18,
        "replicas": 100,
        "workers": 1,
        "graph": {"kind": "rgg", "n": 50, "edges_target": 214},
        "weights": {"kind": "metropolis", "positive_definite": "auto", "kappa": 0.1},
        "data": {"kind": "synthetic", "per_node": 2, "dim_minus_1": 3, "noise_sd": 0.1},
        "cost": {"kind": "logistic", "R": 0.1, "lipschitz": "pooled"},
        "constraint": {"kind": "ball", "radius": 100.0},
        "alpha": {"rule": "inverse_L", "c": 50},
        "schedule": {"kind": "geometric", "delta": "auto"},
        "algorithms": ["standard", "idling"],
        "metric": "rel_err",
        "target": 0.01,
        "max_iter": 1500,
        "init": {"mode": "uniform", "scale": 50.0},
        "record_error": True,
    }


def _preset_fig2():
    cfg = _synthetic_base()
    cfg.update(alpha={"rule": "inverse_L", "c": 250}, target=0.005, max_iter=4000,
               record_error=False)
    return cfg


def _preset_fig3ab():
    cfg = _synthetic_base()
    cfg.update(data={"kind": "libsvm", "path": None, "dim_minus_1": 119},
               cost={"kind": "logistic", "R": 0.1, "lipschitz": "per_node"},
               schedule={"kind": "capped_geometric", "delta": "auto", "floor": 0.1,
                         "cap": 0.99999},
               metric="avg_cost", target=None, max_iter=2000, replicas=1,
               init={"mode": "zero"}, record_error=False)
    return cfg


def _preset_fig3c():
    cfg = _synthetic_base()
    cfg.update(algorithms=["idling", "async:lo", "async:hi"], max_iter=2000,
               record_error=False,
               **{"async": {"link_prob": 0.5,
                            "scenarios": {"lo": [0.9, 0.5], "hi": [0.9, 0.1]}}})
    return cfg


def _preset_fig3d():
    cfg = _synthetic_base()
    cfg.update(algorithms=["idling", "gossip"], replicas=20, max_iter=2000,
               record_error=False)
    return cfg


def _preset_table1():
    return {
        "kind": "table1",
        "seed": 3,
        "graph": {"kind": "rgg", "n": 4, "radius": 0.6},
        "data": {"kind": "quadratic", "low": 0.0, "high": 5.0, "dim": 1},
        "c0": "inverse_2N",
        "theta": "inverse_c0_lambda2",
        "alphas": [10 ** -1.5, 1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5, 1e-4],
        "init": {"mode": "zero"},
        "max_iter": 2_000_000,
    }


def _preset_remark2():
    return {
        "kind": "remark2",
        "graph": {"kind": "path", "n": 5},
        "weights": {"kind": "metropolis", "positive_definite": "always", "kappa": 0.1},
        "alphas": [0.1, 0.5, "lambdaN"],
        "iterations": 50,
        "init_value": 1.0,
        "box": [-2.0, 2.0],
    }


PRESETS = {
    "fig1": _synthetic_base,
    "fig2": _preset_fig2,
    "fig3ab": _preset_fig3ab,
    "fig3c": _preset_fig3c,
    "fig3d": _preset_fig3d,
    "table1": _preset_table1,
    "remark2": _preset_remark2,
}


def preset(name):
    """A fresh config dict for a named preset."""
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = PRESETS[name]()
    cfg["name"] = name
    return cfg


# ---------------------------------------------------------------- validation

def _need(cond, path, msg):
    if not cond:
        raise ConfigError(path, msg)


def _num(d, key, path, positive=False, integer=False):
    v = d.get(key)
    _need(isinstance(v, (int, float)) and not isinstance(v, bool), f"{path}.{key}",
          "must be a number")
    if integer:
        _need(float(v).is_integer(), f"{path}.{key}", "must be an integer")
    if positive:
        _need(v > 0, f"{path}.{key}", "must be positive")
    return v


def validate_config(raw):
    """Resolve presets, fill defaults, and check field types.

    Exactly one of ``preset`` and a full spec (``kind``) must be given; with a
    preset, the remaining keys override the preset fields.
    """
    _need(isinstance(raw, dict), "$", "config must be an object")
    raw = copy.deepcopy(raw)
    if "preset" in raw:
        _need("kind" not in raw, "$.kind", "give either a preset or a full spec, not both")
        cfg = preset(raw.pop("preset"))
        cfg.update(raw)
    else:
        _need("kind" in raw, "$.kind", "missing (or give a preset)")
        cfg = raw
    kind = cfg["kind"]
    _need(kind in ("monte_carlo", "table1", "remark2"), "$.kind", f"unknown kind {kind!r}")
    cfg.setdefault("name", kind)
    cfg.setdefault("seed", 0)
    _num(cfg, "seed", "$", integer=True)
    _need(cfg["seed"] >= 0, "$.seed", "must be nonnegative")
    _check_graph(cfg.get("graph"), "$.graph")
    if kind == "monte_carlo":
        _check_monte_carlo(cfg)
    elif kind == "table1":
        _need(isinstance(cfg.get("alphas"), list) and cfg["alphas"], "$.alphas",
              "must be a nonempty list")
        for i, a in enumerate(cfg["alphas"]):
            _need(isinstance(a, (int, float)) and a > 0, f"$.alphas[{i}]", "must be positive")
        _num(cfg, "max_iter", "$", positive=True, integer=True)
    return cfg


def _check_graph(g, path):
    _need(isinstance(g, dict), path, "must be an object")
    kind = g.get("kind")
    _need(kind in ("rgg", "path", "cycle", "complete", "edgelist"), f"{path}.kind",
          f"unknown graph kind {kind!r}")
    if kind == "edgelist":
        _need(isinstance(g.get("path"), str), f"{path}.path", "must be a file path")
        return
    _num(g, "n", path, positive=True, integer=True)
    _need(g["n"] >= 2, f"{path}.n", "must be >= 2")
    if kind == "rgg":
        _need(("radius" in g) != ("edges_target" in g), path,
              "give exactly one of radius and edges_target")
        if "radius" in g:
            _num(g, "radius", path, positive=True)
        else:
            _num(g, "edges_target", path, positive=True, integer=True)


def _check_monte_carlo(cfg):
    for key, default in (("replicas", 1), ("workers", 1), ("max_iter", 1000)):
        cfg.setdefault(key, default)
        _num(cfg, key, "$", positive=True, integer=True)
    cfg.setdefault("weights", {"kind": "metropolis", "positive_definite": "auto"})
    w = cfg["weights"]
    _need(w.get("kind") in ("metropolis", "equal"), "$.weights.kind", "metropolis or equal")
    _need(w.get("positive_definite", "auto") in ("auto", "always", "never"),
          "$.weights.positive_definite", "auto, always or never")
    d = cfg.get("data")
    _need(isinstance(d, dict) and d.get("kind") in ("synthetic", "libsvm", "quadratic"),
          "$.data.kind", "synthetic, libsvm or quadratic")
    if d["kind"] == "synthetic":
        for key in ("per_node", "dim_minus_1"):
            _num(d, key, "$.data", positive=True, integer=True)
        _num(d, "noise_sd", "$.data")
    if d["kind"] == "libsvm" and d.get("path") is not None:
        _need(os.path.exists(d["path"]), "$.data.path", f"file not found: {d['path']}")
    c = cfg.setdefault("constraint", {"kind": "ball", "radius": 100.0})
    _need(c.get("kind") in ("ball", "box"), "$.constraint.kind", "ball or box")
    a = cfg.get("alpha")
    _need(isinstance(a, dict) and a.get("rule") in ("inverse_L", "absolute"),
          "$.alpha.rule", "inverse_L or absolute")
    _num(a, "c" if a["rule"] == "inverse_L" else "value", "$.alpha", positive=True)
    s = cfg.setdefault("schedule", {"kind": "always_on"})
    _need(isinstance(s, dict) and "kind" in s, "$.schedule.kind", "missing")
    algs = cfg.setdefault("algorithms", ["standard", "idling"])
    _need(isinstance(algs, list) and algs, "$.algorithms", "must be a nonempty list")
    for i, name in enumerate(algs):
        base, _, scen = name.partition(":")
        _need(base in engine.ALGORITHMS, f"$.algorithms[{i}]", f"unknown algorithm {name!r}")
        if base == "async":
            scenarios = cfg.get("async", {}).get("scenarios", {})
            _need(scen in scenarios, f"$.algorithms[{i}]",
                  f"async scenario {scen!r} not defined under async.scenarios")
    cfg.setdefault("metric", "rel_err")
    _need(cfg["metric"] in ("rel_err", "avg_cost", "dist_to_xbullet"), "$.metric",
          "rel_err, avg_cost or dist_to_xbullet")
    if cfg.get("target") is not None:
        _num(cfg, "target", "$")
    cfg.setdefault("init", {"mode": "shared", "scale": 50.0})
    _need(cfg["init"].get("mode") in ("shared", "zero", "uniform", "constant"),
          "$.init.mode", "shared, zero, uniform or constant")
    cfg.setdefault("record_error", False)


# ---------------------------------------------------------------- problem building

@dataclass(frozen=True, eq=False)
class Problem:
    network: graph.Network
    weights: graph.WeightMatrix
    instance: costs.ProblemInstance
    alpha: float
    schedule: object
    reference: engine.Reference
    centralized: oracle.CentralizedSolution
    penalty: oracle.PenaltySolution
    data_source: str
    pd_shifted: bool


def build_network(g, seed):
    kind = g["kind"]
    if kind == "edgelist":
        with open(g["path"]) as fh:
            return graph.read_edgelist(fh)
    n = int(g["n"])
    if kind == "path":
        return graph.path_graph(n)
    if kind == "cycle":
        return graph.cycle_graph(n)
    if kind == "complete":
        return graph.complete_graph(n)
    radius = g.get("radius") or graph.radius_for_edge_count(n, g["edges_target"])
    return graph.random_geometric_graph(n, radius, sch.stream(seed, 0, "graph"),
                                        max_attempts=int(g.get("max_attempts", 1000)))


def _build_model(cfg, n, seed):
    d = cfg["data"]
    R = float(cfg.get("cost", {}).get("R", 0.1))
    if d["kind"] == "synthetic":
        shards, _ = data.gen_synthetic(n, int(d["per_node"]), int(d["dim_minus_1"]),
                                       float(d["noise_sd"]), sch.stream(seed, 0, "data"))
        return costs.LogisticCost.from_shards(shards.features, shards.labels, R), "synthetic"
    if d["kind"] == "libsvm":
        dim = int(d.get("dim_minus_1", 119))
        if d.get("path"):
            ds, source = data.load_libsvm(d["path"], dim=dim), str(d["path"])
        else:
            ds, source = data.bundled_fixture(dim), "bundled fixture (not-a1a)"
        shards = data.partition(ds, n)
        return costs.LogisticCost.from_shards(shards.features, shards.labels, R), source
    rng = sch.stream(seed, 0, "data")
    centers = d.get("centers")
    if centers is None:
        centers = rng.uniform(d.get("low", 0.0), d.get("high", 5.0), size=(n, d.get("dim", 1)))
    return costs.QuadraticCost(centers), "quadratic"


def _build_constraint(c):
    if c["kind"] == "ball":
        return costs.Ball(float(c["radius"]))
    return costs.Box(c["lo"], c["hi"])


def contraction_safe(c, alpha, L, mu):
    """True when every eigenvalue of C - alpha*H stays within 1 - alpha*mu in magnitude."""
    return c.lambdaN >= alpha * (L + mu) - 1.0


def build_problem(cfg, solve_oracles=True):
    seed = int(cfg["seed"])
    net = build_network(cfg["graph"], seed)
    model, source = _build_model(cfg, net.n, seed)
    if model.n_nodes != net.n:
        raise ConfigError("$.data", f"model has {model.n_nodes} nodes, graph has {net.n}")
    lip = cfg.get("cost", {}).get("lipschitz", "per_node")
    inst = costs.derive_constants(model, _build_constraint(cfg["constraint"]), lip)
    a = cfg["alpha"]
    alpha = (1.0 / (a["c"] * inst.lipschitz_L) if a["rule"] == "inverse_L"
             else float(a["value"]))
    w = cfg["weights"]
    C = (graph.metropolis_weights(net) if w["kind"] == "metropolis"
         else graph.equal_weights(net, float(w["c0"])))
    mode = w.get("positive_definite", "auto")
    # the per-node bound is always a valid curvature bound, so use it here
    L_true = model.lipschitz("per_node")
    shift = mode == "always" or (mode == "auto" and not contraction_safe(C, alpha, L_true,
                                                                           inst.mu))
    if shift:
        C = graph.ensure_positive_definite(C, float(w.get("kappa", 0.1)))
    s = dict(cfg["schedule"])
    if s.get("delta") == "auto":
        s["delta"] = sch.delta_from_alpha(alpha, inst.mu)
    schedule = sch.schedule_from_dict(s)
    if solve_oracles:
        cen = oracle.solve_centralized(inst)
        pen = oracle.solve_penalty(inst, C, alpha)
        ref = engine.Reference(cen.f_star, cen.x_star, pen.x_bullet)
    else:
        cen = pen = None
        ref = engine.Reference(float("nan"))
    return Problem(net, C, inst, alpha, schedule, ref, cen, pen, source, shift)


# ---------------------------------------------------------------- running

def _run_config(cfg, alg, replica, alpha):
    init = cfg["init"]
    return engine.RunConfig(
        algorithm=alg.partition(":")[0], alpha=alpha, max_iter=int(cfg["max_iter"]),
        target=cfg.get("target"), metric=cfg["metric"], seed=int(cfg["seed"]),
        replica=replica, init=init["mode"], init_scale=float(init.get("scale", 50.0)),
        init_value=float(init.get("value", 1.0)), record_error=bool(cfg["record_error"]),
        record_running_average=bool(cfg.get("record_running_average", False)))


def async_config(cfg, network, scenario):
    spec = cfg["async"]
    first, second = spec["scenarios"][scenario]
    n = network.n
    grad = np.where(np.arange(n) < n // 2, float(first), float(second))
    return sch.AsyncConfig.uniform(network.m, float(spec["link_prob"]), grad)


def run_replica(cfg, problem, alg, replica):
    """One sample path of one algorithm; deterministic in (seed, replica)."""
    acfg = None
    if alg.startswith("async"):
        acfg = async_config(cfg, problem.network, alg.partition(":")[2])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return engine.run(_run_config(cfg, alg, replica, problem.alpha), problem.instance,
                          problem.weights, problem.schedule, problem.reference, async_cfg=acfg)


def _run_replica_star(args):
    return run_replica(*args)


def run_algorithms(cfg, problem):
    """Traces per algorithm; the standard method is deterministic and run once."""
    out = {}
    workers = int(cfg.get("workers", 1))
    for alg in cfg["algorithms"]:
        reps = 1 if alg == "standard" else int(cfg["replicas"])
        jobs = [(cfg, problem, alg, r) for r in range(reps)]
        if workers > 1 and reps > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                out[alg] = list(ex.map(_run_replica_star, jobs))
        else:
            out[alg] = [run_replica(*j) for j in jobs]
    return out


def histogram(values, bins=HIST_BINS):
    """Equal-width bins over [min, max], last bin closed on the right."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("histogram of an empty sample")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts, edges = np.histogram(values, bins=int(bins))
    return edges, counts


def aggregate(traces):
    """Column-wise mean over replicas, truncated to the shortest trace."""
    n = min(len(t) for t in traces)
    cols = [c for c in traces[0].columns if c in engine.TRACE_COLUMNS + engine.EXTRA_COLUMNS]
    return {c: np.mean([t.columns[c][:n] for t in traces], axis=0) for c in cols}


def hitting_summary(traces, metric, eps):
    hits = [t.hitting(metric, eps) for t in traces]
    ok = [h for h in hits if h is not None]
    if not ok:
        return {"replicas": len(traces), "hits": 0}
    it = np.array([h[0] for h in ok], float)
    cost = np.array([h[1] for h in ok], float)
    return {"replicas": len(traces), "hits": len(ok), "mean_iterations": float(it.mean()),
            "mean_cost": float(cost.mean()), "iterations": it.tolist(), "costs": cost.tolist()}


# ---------------------------------------------------------------- reports

def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(v, np.integer):
        return int(v)
    return v


def _trace_checks(cfg, problem, traces, bounds):
    """Cheap audits of the recorded traces against closed-form bounds."""
    checks = {}
    N = problem.instance.n_nodes
    if "standard" in traces:
        t = traces["standard"][0]
        checks["standard_cost_is_N_k"] = bool(np.all(t["total_cost"] == N * t["k"]))
        dist = t["dist_to_xbullet"]
        checks["standard_rate_bound"] = bool(np.all(dist <= bounds.standard_rate(t["k"])
                                                    * (1 + 1e-12) + 1e-12))
    if "idling" in traces and len(traces["idling"]) > 1:
        tr = traces["idling"]
        k = tr[0]["k"]
        dis2 = np.array([t["disagreement"] ** 2 for t in tr])
        se = dis2.std(axis=0, ddof=1) / math.sqrt(len(tr))
        checks["disagreement_bound"] = bool(np.all(dis2.mean(axis=0)
                                                   <= bounds.disagreement_sq_bound + 3 * se))
        if bounds.eta is not None:
            dist = np.array([t["dist_to_xbullet"] for t in tr])
            se = dist.std(axis=0, ddof=1) / math.sqrt(len(tr))
            ok = dist.mean(axis=0)[1:] <= bounds.idling_rate(k[1:]) + 3 * se[1:]
            checks["idling_rate_bound"] = bool(np.all(ok))
        if "err_norm" in tr[0].columns:
            e2 = np.array([t["err_norm"][:-1] ** 2 for t in tr])
            se = e2.std(axis=0, ddof=1) / math.sqrt(len(tr))
            p = problem.schedule.probabilities(e2.shape[1])
            checks["error_bound"] = bool(np.all(e2.mean(axis=0)
                                                <= bounds.error_bound(p) + 3 * se))
    return checks


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_monte_carlo(cfg, out_dir=None):
    """Build the problem, run every algorithm, and write the output bundle."""
    problem = build_problem(cfg)
    traces = run_algorithms(cfg, problem)
    bounds = oracle.theory_bounds(problem.instance, problem.weights, problem.alpha,
                                  problem.schedule)
    metric, eps = cfg["metric"], cfg.get("target")
    inst = problem.instance
    report = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.get("name"),
        "config": cfg,
        "backend": BACKEND,
        "data_source": problem.data_source,
        "a1a_url": A1A_URL if cfg["data"]["kind"] == "libsvm" else None,
        "alpha": problem.alpha,
        "schedule": {**problem.schedule.to_dict(), "formula": problem.schedule.formula(),
                     "p_min": problem.schedule.p_min},
        "delta": getattr(problem.schedule, "delta", None),
        "constants": {"mu": inst.mu, "L": inst.lipschitz_L, "G": inst.grad_bound_G,
                      "D": inst.diameter_D, "Mf": inst.f_upper_Mf, "mf": inst.f_lower_mf,
                      "lipschitz_mode": inst.lipschitz_mode},
        "network": {"n": problem.network.n, "m": problem.network.m,
                    "lambda2_C": problem.weights.lambda2,
                    "lambdaN_C": problem.weights.lambdaN,
                    "positive_definite_shift": problem.pd_shifted},
        "bounds": bounds.to_dict(),
        "oracle": {"f_star": problem.centralized.f_star,
                   "x_star": problem.centralized.x_star,
                   "centralized_residual": problem.centralized.residual,
                   "penalty_step_norm": problem.penalty.step_norm,
                   "penalty_iterations": problem.penalty.iterations},
        "algorithms": {},
    }
    if eps is not None:
        for alg, tr in traces.items():
            report["algorithms"][alg] = hitting_summary(tr, metric, eps)
        std, idl = report["algorithms"].get("standard"), report["algorithms"].get("idling")
        if std and idl and std.get("hits") and idl.get("hits") == idl["replicas"]:
            report["savings_percent"] = 100.0 * (1 - idl["mean_cost"] / std["mean_cost"])
            report["iteration_overhead_percent"] = 100.0 * (
                idl["mean_iterations"] / std["mean_iterations"] - 1)
    for alg, tr in traces.items():
        agg = aggregate(tr)
        report["algorithms"].setdefault(alg, {})["final_mean"] = {
            c: float(v[-1]) for c, v in agg.items()}
    report["checks"] = _trace_checks(cfg, problem, traces, bounds)
    if out_dir is not None:
        write_bundle(out_dir, cfg, traces, report)
    return report, traces, problem


def write_bundle(out_dir, cfg, traces, report):
    os.makedirs(os.path.join(out_dir, "traces"), exist_ok=True)
    metric, eps = cfg.get("metric"), cfg.get("target")
    for alg, tr in traces.items():
        safe = alg.replace(":", "_")
        for r, t in enumerate(tr):
            with open(os.path.join(out_dir, "traces", f"{safe}_r{r}.csv"), "w") as fh:
                t.to_csv(fh, extras=True)
        agg = aggregate(tr)
        cols = list(agg)
        _write_csv(os.path.join(out_dir, f"aggregate_{safe}.csv"), cols,
                   zip(*[agg[c] for c in cols]))
        if eps is not None:
            summary = hitting_summary(tr, metric, eps)
            for key in ("costs", "iterations"):
                vals = summary.get(key)
                if vals:
                    edges, counts = histogram(vals)
                    _write_csv(os.path.join(out_dir, f"hist_{safe}_{key}.csv"),
                               ["bin_lo", "bin_hi", "count"],
                               zip(edges[:-1], edges[1:], counts.tolist()))
    _write_json(os.path.join(out_dir, "report.json"), report)


# ---------------------------------------------------------------- quadratic savings table

def _quadratic_network(cfg):
    seed = int(cfg["seed"])
    return build_network(cfg["graph"], seed)


def table1_setup(cfg, alpha):
    net = _quadratic_network(cfg)
    n = net.n
    d = cfg["data"]
    rng = sch.stream(int(cfg["seed"]), 0, "data")
    centers = np.asarray(d["centers"], float) if "centers" in d else rng.uniform(
        d.get("low", 0.0), d.get("high", 5.0), size=(n, int(d.get("dim", 1))))
    c0 = 1.0 / (2 * n) if cfg.get("c0", "inverse_2N") == "inverse_2N" else float(cfg["c0"])
    lam2 = float(np.linalg.eigvalsh(net.laplacian())[1])
    theta = (1.0 / (c0 * lam2) if cfg.get("theta", "inverse_c0_lambda2") == "inverse_c0_lambda2"
             else float(cfg["theta"]))
    return oracle.QuadraticSetup(centers, net, c0, theta, alpha, np.zeros_like(centers))


def quadratic_path(setup, schedule, eps, max_iter, rng):
    """Iterate one sample path until ||x - b_star|| <= eps; returns (iterations, cost)."""
    net = setup.network
    C = graph.equal_weights(net, setup.c0)
    inst = costs.derive_constants(costs.QuadraticCost(setup.centers), costs.Ball(1e12))
    bstar = setup.b_star
    state = engine.RunState(setup.x0.copy())
    n = net.n
    for k in range(max_iter):
        if np.linalg.norm(state.x - bstar) <= eps:
            return state.k, state.total_cost
        p = schedule.probability(k)
        z = sch.draw_activations(p, n, rng)
        state = engine.step_idling(state, inst, C, setup.alpha, z, p)
    if np.linalg.norm(state.x - bstar) <= eps:
        return state.k, state.total_cost
    raise oracle.BudgetExhausted(f"accuracy {eps} not reached in {max_iter} iterations")


def run_table1(cfg, out_dir=None):
    rows = []
    seed = int(cfg["seed"])
    for i, alpha in enumerate(cfg["alphas"]):
        setup = table1_setup(cfg, float(alpha))
        qb = oracle.quadratic_bounds(setup, horizon=3)
        eps = qb.epsilon
        sched = sch.HalfGeometric(setup.delta)
        it_s, cost_s = quadratic_path(setup, sch.AlwaysOn(), eps, int(cfg["max_iter"]),
                                      sch.stream(seed, i, "activation"))
        it_p, cost_p = quadratic_path(setup, sched, eps, int(cfg["max_iter"]),
                                      sch.stream(seed, i, "activation"))
        rows.append({"alpha": float(alpha), "epsilon": eps, "theta": setup.theta,
                     "delta": setup.delta, "c0": setup.c0, "lambda2_L": setup.lambda2_L,
                     "R_sp": setup.R_sp, "R_0": setup.R_0, "K_epsilon": qb.K_epsilon,
                     "predicted_savings": qb.predicted_savings,
                     "cost_standard": cost_s, "cost_proposed": cost_p,
                     "iterations_standard": it_s, "iterations_proposed": it_p,
                     "cost_difference": cost_s - cost_p})
    report = {"schema_version": SCHEMA_VERSION, "name": cfg.get("name"), "config": cfg,
              "backend": BACKEND, "rows": rows}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        cols = list(rows[0])
        _write_csv(os.path.join(out_dir, "table.csv"), cols, ([r[c] for c in cols] for r in rows))
        _write_json(os.path.join(out_dir, "report.json"), report)
    return report


# ---------------------------------------------------------------- exact-factor example

def remark2_problem(cfg):
    net = build_network(cfg["graph"], int(cfg.get("seed", 0)))
    C = graph.metropolis_weights(net)
    w = cfg.get("weights", {})
    if w.get("positive_definite", "always") != "never":
        C = graph.ensure_positive_definite(C, float(w.get("kappa", 0.1)))
    lo, hi = cfg.get("box", [-2.0, 2.0])
    inst = costs.derive_constants(costs.QuadraticCost(np.zeros((net.n, 1))),
                                  costs.Box([lo], [hi]))
    return net, C, inst


def run_remark2(cfg, out_dir=None):
    net, C, inst = remark2_problem(cfg)
    rows = []
    for a in cfg["alphas"]:
        alpha = C.lambdaN if a == "lambdaN" else float(a)
        state = engine.RunState(np.full((net.n, 1), float(cfg.get("init_value", 1.0))))
        dists = [float(np.linalg.norm(state.x))]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for _ in range(int(cfg.get("iterations", 50))):
                state = engine.step_standard(state, inst, C, alpha)
                dists.append(float(np.linalg.norm(state.x)))
        ratios = np.array(dists[1:]) / np.array(dists[:-1])
        rows.append({"alpha": alpha, "expected_factor": 1 - alpha,
                     "max_relative_deviation": float(np.max(np.abs(ratios / (1 - alpha) - 1))),
                     "distances": dists})
    report = {"schema_version": SCHEMA_VERSION, "name": cfg.get("name"), "config": cfg,
              "backend": BACKEND, "lambdaN_C": C.lambdaN, "rows": rows}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_json(os.path.join(out_dir, "report.json"), report)
    return report


def run_experiment(cfg, out_dir=None):
    """Validate ``cfg`` and dispatch on its kind; returns the report dict."""
    cfg = validate_config(cfg)
    if cfg["kind"] == "table1":
        return run_table1(cfg, out_dir)
    if cfg["kind"] == "remark2":
        return run_remark2(cfg, out_dir)
    return run_monte_carlo(cfg, out_dir)[0]


def bounds_report(cfg):
    """Theory constants only (no Monte-Carlo runs)."""
    cfg = validate_config(cfg)
    if cfg["kind"] == "table1":
        out = []
        for alpha in cfg["alphas"]:
            setup = table1_setup(cfg, float(alpha))
            qb = oracle.quadratic_bounds(setup, horizon=3)
            out.append({"alpha": alpha, "epsilon": qb.epsilon, "K_epsilon": qb.K_epsilon,
                        "predicted_savings": qb.predicted_savings, "R_sp": qb.R_sp,
                        "R_0": qb.R_0, "theta": qb.theta, "c0": qb.c0,
                        "lambda2_L": qb.lambda2_L})
        return _jsonable({"schema_version": SCHEMA_VERSION, "quadratic": out})
    if cfg["kind"] == "remark2":
        net, C, inst = remark2_problem(cfg)
        return _jsonable({"schema_version": SCHEMA_VERSION, "lambdaN_C": C.lambdaN,
                          "mu": inst.mu, "L": inst.lipschitz_L})
    problem = build_problem(cfg, solve_oracles=False)
    b = oracle.theory_bounds(problem.instance, problem.weights, problem.alpha,
                             problem.schedule)
    return _jsonable({"schema_version": SCHEMA_VERSION, "alpha": problem.alpha,
                      "schedule": problem.schedule.formula(), "bounds": b.to_dict()})
