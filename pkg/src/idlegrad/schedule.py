"""Activation-probability schedules, Bernoulli draws, and seeded RNG streams."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ScheduleError(ValueError):
    pass


PURPOSES = {"graph": 1, "data": 2, "init": 3, "activation": 4, "async": 5,
            "gossip": 6, "shuffle": 7, "instance": 8}


def stream(seed, replica=0, purpose="activation"):
    """Independent counter-based generator keyed by (seed, replica, purpose).

    Streams do not depend on the order in which replicas are run.
    """
    code = PURPOSES[purpose] if isinstance(purpose, str) else int(purpose)
    ss = np.random.SeedSequence([int(seed), int(replica), code])
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------- schedules

class _Schedule:
    kind = ""

    def raw(self, k):
        raise NotImplementedError

    def probability(self, k):
        return float(min(1.0, max(self.p_min, self.raw(k))))

    def probabilities(self, horizon):
        return np.array([self.probability(k) for k in range(horizon)])

    def formula(self):
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind, **{k: v for k, v in self.__dict__.items()}}


@dataclass(frozen=True)
class AlwaysOn(_Schedule):
    kind = "always_on"

    @property
    def p_min(self):
        return 1.0

    def raw(self, k):
        return 1.0

    def formula(self):
        return "p_k = 1"


@dataclass(frozen=True)
class Geometric(_Schedule):
    """p_k = 1 - delta^(k+1)."""

    delta: float
    kind = "geometric"

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ScheduleError("delta must lie in (0, 1)")

    @property
    def p_min(self):
        return 1.0 - self.delta

    def raw(self, k):
        return 1.0 - self.delta ** (k + 1)

    def formula(self):
        return f"p_k = 1 - {self.delta!r}^(k+1)"


@dataclass(frozen=True)
class HalfGeometric(_Schedule):
    """p_k = 1 - delta^(k+1) / 2."""

    delta: float
    kind = "half_geometric"

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ScheduleError("delta must lie in (0, 1)")

    @property
    def p_min(self):
        return 1.0 - 0.5 * self.delta

    def raw(self, k):
        return 1.0 - 0.5 * self.delta ** (k + 1)

    def formula(self):
        return f"p_k = 1 - 0.5 * {self.delta!r}^(k+1)"


@dataclass(frozen=True)
class CappedGeometric(_Schedule):
    """p_k = max(1 - d^(k+1), floor) with d = min(delta, cap)."""

    delta: float
    floor: float = 0.1
    cap: float = 0.99999
    kind = "capped_geometric"

    def __post_init__(self):
        if not 0 < self.delta < 1 or not 0 < self.cap < 1:
            raise ScheduleError("delta and cap must lie in (0, 1)")
        if not 0 < self.floor <= 1:
            raise ScheduleError("floor must lie in (0, 1]")

    @property
    def effective_delta(self):
        return min(self.delta, self.cap)

    @property
    def p_min(self):
        return max(self.floor, 1.0 - self.effective_delta)

    def raw(self, k):
        return max(1.0 - self.effective_delta ** (k + 1), self.floor)

    def formula(self):
        return f"p_k = max(1 - {self.effective_delta!r}^(k+1), {self.floor!r})"


@dataclass(frozen=True)
class Sublinear(_Schedule):
    """p_k = 1 - cu / (k+1)^(1+zeta), clamped below at max(1 - cu, 0.01)."""

    cu: float
    zeta: float
    kind = "sublinear"

    def __post_init__(self):
        if not self.cu > 0 or not self.zeta > 0:
            raise ScheduleError("cu and zeta must be positive")

    @property
    def p_min(self):
        return max(1.0 - self.cu, 0.01)

    def raw(self, k):
        return 1.0 - self.cu / (k + 1) ** (1.0 + self.zeta)

    def u(self, k):
        return 1.0 - self.probability(k)

    def sqrt_u_sum(self, terms=100_000):
        """S_u = sum_k sqrt(u_k): partial sum plus an integral tail bound.

        Returns ``inf`` when zeta <= 1 (the series diverges).
        """
        if self.zeta <= 1:
            return math.inf
        k = np.arange(terms, dtype=float)
        p = np.clip(1.0 - self.cu / (k + 1) ** (1 + self.zeta), self.p_min, 1.0)
        head = float(np.sqrt(1.0 - p).sum())
        # sqrt(u_k) <= sqrt(cu) * (k+1)^(-(1+zeta)/2); integral of the tail from terms
        e = (1.0 + self.zeta) / 2.0
        tail = math.sqrt(self.cu) * terms ** (1.0 - e) / (e - 1.0)
        return head + tail

    def formula(self):
        return f"p_k = max(1 - {self.cu!r}/(k+1)^{1 + self.zeta!r}, {self.p_min!r})"


def schedule_from_dict(spec):
    """Build a schedule from ``{kind, delta?, floor?, cap?, cu?, zeta?}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    table = {"always_on": AlwaysOn, "geometric": Geometric, "half_geometric": HalfGeometric,
             "capped_geometric": CappedGeometric, "sublinear": Sublinear}
    if kind not in table:
        raise ScheduleError(f"unknown schedule kind {kind!r}")
    try:
        return table[kind](**spec)
    except TypeError as exc:
        raise ScheduleError(f"bad fields for schedule {kind!r}: {exc}") from None


def delta_from_alpha(alpha, mu, cap=0.99999):
    """min((1 - alpha*mu)^2, cap)."""
    am = alpha * mu
    if not 0 < am <= 1:
        raise ScheduleError("need 0 < alpha * mu <= 1")
    return min((1.0 - am) ** 2, cap)


# ---------------------------------------------------------------- draws

def draw_activations(p, n, rng):
    """n independent Bernoulli(p) bits as a boolean array."""
    if not 0 <= p <= 1:
        raise ScheduleError("p must lie in [0, 1]")
    if p == 1.0:
        return np.ones(n, dtype=bool)
    return rng.random(n) < p


@dataclass(frozen=True, eq=False)
class AsyncConfig:
    """Per-edge link-up and per-node gradient-success probabilities."""

    link_up_prob: np.ndarray
    grad_success_prob: np.ndarray

    def __post_init__(self):
        lp = np.asarray(self.link_up_prob, dtype=float)
        gp = np.asarray(self.grad_success_prob, dtype=float)
        for name, arr in (("link_up_prob", lp), ("grad_success_prob", gp)):
            if np.any((arr < 0) | (arr > 1)) or not np.all(np.isfinite(arr)):
                raise ScheduleError(f"{name} entries must lie in [0, 1]")
        object.__setattr__(self, "link_up_prob", lp)
        object.__setattr__(self, "grad_success_prob", gp)

    @classmethod
    def uniform(cls, n_edges, link_prob, grad_probs):
        return cls(np.full(n_edges, float(link_prob)), np.asarray(grad_probs, dtype=float))


def draw_async(cfg, rng):
    """(link bits per edge, gradient bits per node), mutually independent."""
    links = rng.random(cfg.link_up_prob.shape[0]) < cfg.link_up_prob
    grads = rng.random(cfg.grad_success_prob.shape[0]) < cfg.grad_success_prob
    return links, grads
