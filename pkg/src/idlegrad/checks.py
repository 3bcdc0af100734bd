"""Fast self-checks of core invariants on small instances (the ``check`` command)."""
from __future__ import annotations

import warnings

import numpy as np

from . import costs, data, engine, graph, oracle
from . import schedule as sch


def _small_logistic(seed=0, n=8):
    rng = sch.stream(seed, 0, "graph")
    net = graph.random_geometric_graph(n, 0.6, rng)
    shards, _ = data.gen_synthetic(n, 3, 2, 0.1, sch.stream(seed, 0, "data"))
    model = costs.LogisticCost.from_shards(shards.features, shards.labels, 0.1)
    inst = costs.derive_constants(model, costs.Ball(10.0))
    C = graph.ensure_positive_definite(graph.metropolis_weights(net), 0.1)
    return net, C, inst


def check_standard_is_all_active():
    _, C, inst = _small_logistic()
    alpha = 0.5 * C.lambdaN / inst.lipschitz_L
    x0 = sch.stream(0, 0, "init").uniform(-5, 5, size=(inst.n_nodes, inst.dim))
    s = engine.step_standard(engine.RunState(x0), inst, C, alpha)
    z = np.ones(inst.n_nodes, dtype=bool)
    t = engine.step_idling(engine.RunState(x0), inst, C, alpha, z, 1.0)
    return bool(np.array_equal(s.x, t.x))


def check_penalty_fixed_point():
    _, C, inst = _small_logistic()
    alpha = 0.5 * C.lambdaN / inst.lipschitz_L
    xb = oracle.solve_penalty(inst, C, alpha).x_bullet
    nxt = engine.step_standard(engine.RunState(xb), inst, C, alpha).x
    return bool(np.linalg.norm(nxt - xb) <= 1e-9 * max(1.0, np.linalg.norm(xb)))


def check_realizations(draws=1000):
    _, C, _ = _small_logistic()
    rng = sch.stream(1, 0, "activation")
    ok = True
    for _ in range(draws):
        z = sch.draw_activations(0.5, C.network.n, rng)
        W = engine.build_weight_realization(C, z)
        ev = np.linalg.eigvalsh(W)
        ok &= bool(np.allclose(W, W.T) and np.allclose(W.sum(axis=1), 1.0)
                   and ev.min() > 0 and ev.max() <= 1 + 1e-12)
    return ok


def check_exact_factor():
    net = graph.path_graph(5)
    C = graph.ensure_positive_definite(graph.metropolis_weights(net), 0.1)
    inst = costs.derive_constants(costs.QuadraticCost(np.zeros((5, 1))), costs.Box([-2.0], [2.0]))
    ok = True
    for alpha in (0.1, 0.5, C.lambdaN):
        x = engine.RunState(np.ones((5, 1)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            nxt = engine.step_standard(x, inst, C, alpha)
        ok &= bool(abs(np.linalg.norm(nxt.x) / np.linalg.norm(x.x) - (1 - alpha)) <= 1e-12)
    return ok


def check_libsvm_round_trip():
    rng = sch.stream(2, 0, "data")
    X = np.where(rng.random((6, 5)) < 0.4, rng.standard_normal((6, 5)), 0.0)
    ds = data.Dataset(X, np.where(rng.random(6) < 0.5, 1.0, -1.0))
    back = data.parse_libsvm(data.serialize_libsvm(ds), dim=5)
    return bool(np.array_equal(back.features, ds.features)
                and np.array_equal(back.labels, ds.labels))


def check_cost_accounting():
    _, C, inst = _small_logistic()
    alpha = 0.5 * C.lambdaN / inst.lipschitz_L
    ref = engine.Reference(f_star=float("nan"))
    cfg = engine.RunConfig(algorithm="idling", alpha=alpha, max_iter=50, metric="avg_cost",
                           init="zero")
    t = engine.run(cfg, inst, C, sch.Geometric(0.9), ref)
    return bool(np.all(np.diff(t["total_cost"]) == t["active_count"][1:]))


CHECKS = {
    "standard step equals all-active idling step": check_standard_is_all_active,
    "penalty minimizer is a fixed point": check_penalty_fixed_point,
    "weight realizations are symmetric, stochastic, 0 < W <= I": check_realizations,
    "exact contraction factor on the scalar box example": check_exact_factor,
    "LIBSVM serialize/parse round trip": check_libsvm_round_trip,
    "total cost increments by the active count": check_cost_accounting,
}


def run_all(out=print):
    """Run every check, print one line each, and return True when all pass."""
    ok = True
    for name, fn in CHECKS.items():
        try:
            passed = fn()
        except Exception as exc:  # report, keep going
            passed = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok &= passed
    return ok
