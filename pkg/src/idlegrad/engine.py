"""Iteration rules, the penalty-gradient view, and per-iteration metric traces.

Every step rule goes through :func:`idlegrad.kernels.consensus_step`, so the
standard method is literally the idling method with every node active and
``p_k = 1``.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .schedule import AlwaysOn, draw_activations, draw_async, stream

TRACE_COLUMNS = ("k", "rel_err", "avg_cost", "disagreement", "dist_to_xbullet",
                 "total_cost", "active_count")
EXTRA_COLUMNS = ("err_norm", "ra_gap")
ALGORITHMS = ("standard", "idling", "async", "gossip")


class EngineError(ValueError):
    pass


class StopReason(enum.Enum):
    TARGET_REACHED = "target_reached"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass
class RunState:
    x: np.ndarray
    k: int = 0
    total_cost: int = 0
    running_sum: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=float)
        if self.running_sum is None:
            self.running_sum = np.zeros_like(self.x)


@dataclass(frozen=True, eq=False)
class Reference:
    """Oracle values the metrics are measured against."""

    f_star: float
    x_star: np.ndarray | None = None
    x_bullet: np.ndarray | None = None


# ---------------------------------------------------------------- step rules

def _kernel_call(state, instance, c, gscale, active, link_up, grads):
    ptr, idx, w, eid = c.csr
    kind, radius, lo, hi = instance.kernel_projection
    return kernels.consensus_step(state.x, grads, active, link_up, ptr, idx, w, eid,
                                  gscale, kind, radius, lo, hi)


def _advance(state, x_new, cost):
    return RunState(x=x_new, k=state.k + 1, total_cost=state.total_cost + int(cost),
                    running_sum=state.running_sum + state.x)


def step_idling(state, instance, c, alpha, z, p_k, grads=None):
    """Idle rows stay put; active rows mix with active neighbours and step by alpha/p_k."""
    if not p_k > 0:
        raise EngineError("activation probability must be positive")
    z = np.asarray(z, dtype=bool)
    if grads is None:
        grads = instance.model.gradients(state.x)
    gscale = np.full(c.n, alpha / p_k)
    link_up = np.ones(c.network.m, dtype=bool)
    x_new = _kernel_call(state, instance, c, gscale, z, link_up, grads)
    return _advance(state, x_new, z.sum())


def step_standard(state, instance, c, alpha, grads=None):
    """Every node mixes with all neighbours and takes a projected gradient step."""
    return step_idling(state, instance, c, alpha, np.ones(c.n, dtype=bool), 1.0, grads)


def step_async(state, instance, c, alpha, z, async_bits, p_k, grads=None):
    """Idling step where links may drop and gradient evaluations may fail.

    ``async_bits`` is ``(link bits per edge, gradient bits per node)``. Cost
    counts activations regardless of failures.
    """
    links, grad_ok = async_bits
    z = np.asarray(z, dtype=bool)
    if grads is None:
        grads = instance.model.gradients(state.x)
    gscale = (alpha / p_k) * np.asarray(grad_ok, dtype=float)
    x_new = _kernel_call(state, instance, c, gscale, z, np.asarray(links, dtype=bool), grads)
    return _advance(state, x_new, z.sum())


def step_gossip(state, instance, alpha, rng, network=None):
    """One uniformly chosen edge averages 1/2-1/2 and both ends take a gradient step."""
    net = network
    if net is None or net.m < 1:
        raise EngineError("gossip needs a network with at least one edge")
    a, b = net.edges[int(rng.integers(net.m))]
    x = state.x
    avg = 0.5 * (x[a] + x[b])
    ga = instance.model.evaluate(a, x[a])[1]
    gb = instance.model.evaluate(b, x[b])[1]
    x_new = x.copy()
    x_new[a] = instance.project(avg - alpha * ga)
    x_new[b] = instance.project(avg - alpha * gb)
    return _advance(state, x_new, 2)


# ---------------------------------------------------------------- penalty view

def build_weight_realization(c, z):
    """W_ij = C_ij z_i z_j off the diagonal, diagonal fills each row to 1."""
    z = np.asarray(z, dtype=float)
    C = c.entries
    W = C * np.outer(z, z)
    np.fill_diagonal(W, 0.0)
    np.fill_diagonal(W, 1.0 - W.sum(axis=1))
    return W


def penalty_value(instance, c, alpha, X):
    X = np.asarray(X, dtype=float)
    IC = np.eye(c.n) - c.entries
    return float(instance.model.local_values(X).sum() + np.sum(X * (IC @ X)) / (2 * alpha))


def penalty_gradient(instance, c, alpha, X):
    """Gradient of F(x) + (1/(2 alpha)) x^T (I - C) x."""
    X = np.asarray(X, dtype=float)
    return instance.model.gradients(X) + (X - c.entries @ X) / alpha


def error_vector(state, instance, c, alpha, z, p_k, grads=None):
    """Inexactness of the idling step relative to an exact penalty-gradient step."""
    X = state.x
    z = np.asarray(z, dtype=float)
    if grads is None:
        grads = instance.model.gradients(X)
    M = c.entries * (np.outer(z, z) - 1.0)
    np.fill_diagonal(M, 0.0)
    mix = M.sum(axis=1)[:, None] * X - M @ X
    return (z / p_k - 1.0)[:, None] * grads + mix / alpha


# ---------------------------------------------------------------- metrics

def disagreement(X):
    return float(np.linalg.norm(X - X.mean(axis=0)))


def record_metrics(state, instance, reference, mode="rel_err", active_count=0):
    """One trace row as a dict; ``mode='rel_err'`` needs f_star > 0."""
    fvals = instance.model.cross_values(state.x)
    avg = float(fvals.mean())
    if mode == "rel_err":
        if not reference.f_star > 0:
            raise EngineError("relative error needs a positive optimal value")
        rel = float(np.mean((fvals - reference.f_star) / reference.f_star))
    else:
        rel = float("nan")
    dist = (float(np.linalg.norm(state.x - reference.x_bullet))
            if reference.x_bullet is not None else float("nan"))
    return {"k": state.k, "rel_err": rel, "avg_cost": avg,
            "disagreement": disagreement(state.x), "dist_to_xbullet": dist,
            "total_cost": state.total_cost, "active_count": int(active_count)}


@dataclass
class Trace:
    columns: dict
    stop_reason: StopReason
    hit_index: int | None = None
    final_state: RunState | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.columns["k"])

    def __getitem__(self, name):
        return self.columns[name]

    def hitting(self, metric, eps):
        """(iteration, total cost) at the first row with metric <= eps, or None."""
        hits = np.flatnonzero(self.columns[metric] <= eps)
        if hits.size == 0:
            return None
        i = int(hits[0])
        return int(self.columns["k"][i]), int(self.columns["total_cost"][i])

    def to_csv(self, fh, extras=False):
        cols = list(TRACE_COLUMNS) + ([c for c in EXTRA_COLUMNS if c in self.columns]
                                      if extras else [])
        fh.write(",".join(cols) + "\n")
        arrs = [self.columns[c] for c in cols]
        for row in zip(*arrs):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------- run loop

@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "idling"
    alpha: float = 0.01
    max_iter: int = 1000
    target: float | None = None
    metric: str = "rel_err"
    stop_at_target: bool = False
    seed: int = 0
    replica: int = 0
    init: str = "shared"
    init_scale: float = 50.0
    init_value: float = 1.0
    record_error: bool = False
    record_running_average: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise EngineError(f"unknown algorithm {self.algorithm!r}")
        if not self.alpha > 0 or self.max_iter < 1:
            raise EngineError("alpha must be positive and max_iter >= 1")
        if self.metric not in ("rel_err", "avg_cost", "dist_to_xbullet"):
            raise EngineError(f"unknown metric {self.metric!r}")


def initial_point(cfg, instance):
    """Initial stacked iterate; draws use the replica-independent 'init' stream."""
    n, d = instance.n_nodes, instance.dim
    if cfg.init == "zero":
        X = np.zeros((n, d))
    elif cfg.init == "constant":
        X = np.full((n, d), float(cfg.init_value))
    elif cfg.init in ("uniform", "shared"):
        rng = stream(cfg.seed, 0, "init")
        if cfg.init == "uniform":
            X = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(n, d))
        else:
            X = np.tile(rng.uniform(-cfg.init_scale, cfg.init_scale, size=d), (n, 1))
    else:
        raise EngineError(f"unknown init mode {cfg.init!r}")
    return instance.project(X)


def run(cfg, instance, c, schedule=None, reference=None, async_cfg=None, x0=None):
    """Iterate the selected method, recording one metric row per iteration.

    Row 0 is the initial point. Iterates until ``max_iter`` steps, or until the
    chosen metric reaches ``target`` when ``stop_at_target`` is set.
    """
    schedule = schedule or AlwaysOn()
    if reference is None:
        if cfg.metric == "rel_err":
            raise EngineError("rel_err metric needs a reference with f_star")
        reference = Reference(f_star=float("nan"))
    alg = cfg.algorithm
    if alg == "async" and async_cfg is None:
        raise EngineError("async runs need an AsyncConfig")
    L = instance.lipschitz_L
    # I - alpha * Hessian(Psi) contracts iff lambda_N(C) >= alpha (L + mu) - 1
    if alg != "gossip" and c.lambdaN < cfg.alpha * (L + instance.mu) - 1.0:
        warnings.warn(f"alpha={cfg.alpha:.4g} too large for lambda_N(C)={c.lambdaN:.4g}, "
                      f"L={L:.4g}; iterates may not contract", RuntimeWarning, stacklevel=2)

    act_rng = stream(cfg.seed, cfg.replica, "activation")
    async_rng = stream(cfg.seed, cfg.replica, "async")
    gossip_rng = stream(cfg.seed, cfg.replica, "gossip")
    X0 = initial_point(cfg, instance) if x0 is None else np.array(x0, dtype=float)
    state = RunState(X0)
    n = instance.n_nodes
    mode = "rel_err" if cfg.metric == "rel_err" else "avg"

    rows = [record_metrics(state, instance, reference, mode, 0)]
    err_norms, ra_gaps = [], [float("nan")]
    hit = None

    def reached(row):
        return cfg.target is not None and row[cfg.metric] <= cfg.target

    if reached(rows[0]):
        hit = 0
    for k in range(cfg.max_iter):
        if hit is not None and cfg.stop_at_target:
            break
        if alg == "gossip":
            if cfg.record_error:
                err_norms.append(float("nan"))
            state = step_gossip(state, instance, cfg.alpha, gossip_rng, c.network)
            active = 2
        else:
            p = 1.0 if alg == "standard" else schedule.probability(k)
            z = (np.ones(n, dtype=bool) if alg == "standard"
                 else draw_activations(p, n, act_rng))
            grads = instance.model.gradients(state.x)
            if cfg.record_error:
                e = error_vector(state, instance, c, cfg.alpha, z, p, grads)
                err_norms.append(float(np.linalg.norm(e)))
            if alg == "async":
                bits = draw_async(async_cfg, async_rng)
                state = step_async(state, instance, c, cfg.alpha, z, bits, p, grads)
            else:
                state = step_idling(state, instance, c, cfg.alpha, z, p, grads)
            active = int(z.sum())
        row = record_metrics(state, instance, reference, mode, active)
        rows.append(row)
        if cfg.record_running_average:
            xra = state.running_sum.mean(axis=0) / state.k
            ra_gaps.append(instance.model.total_value(xra) - reference.f_star)
        if hit is None and reached(row):
            hit = len(rows) - 1
    stop = StopReason.BUDGET_EXHAUSTED if hit is None else StopReason.TARGET_REACHED

    cols = {name: np.array([r[name] for r in rows]) for name in TRACE_COLUMNS}
    for name in ("k", "total_cost", "active_count"):
        cols[name] = cols[name].astype(np.int64)
    if cfg.record_error:
        cols["err_norm"] = np.array(err_norms + [float("nan")])
    if cfg.record_running_average:
        cols["ra_gap"] = np.array(ra_gaps)
    return Trace(columns=cols, stop_reason=stop, hit_index=hit, final_state=state)


__all__ = ["RunState", "Reference", "Trace", "RunConfig", "StopReason", "EngineError",
           "step_standard", "step_idling", "step_async", "step_gossip",
           "build_weight_realization", "penalty_gradient", "penalty_value", "error_vector",
           "record_metrics", "disagreement", "initial_point", "run"]
