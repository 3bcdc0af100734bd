"""Local cost models, the constraint set, and the derived problem constants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------- constraint sets

@dataclass(frozen=True)
class Ball:
    """Euclidean ball {x : ||x|| <= radius}."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ModelError("ball radius must be positive")

    @property
    def diameter(self):
        # max ||x|| over the set
        return float(self.radius)

    def project(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            nrm = np.linalg.norm(y)
            return y * (self.radius / nrm) if nrm > self.radius else y.copy()
        return kernels.numpy_impl.project_rows(y, 0, self.radius, None, None)

    def kernel_args(self, dim):
        empty = np.zeros(dim)
        return 0, float(self.radius), empty, empty

    def contains(self, y, tol=1e-12):
        y = np.atleast_2d(y)
        return bool(np.all(np.linalg.norm(y, axis=1) <= self.radius * (1 + tol)))


@dataclass(frozen=True, eq=False)
class Box:
    """Coordinate box lo <= x <= hi (bounds broadcast to the dimension)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ModelError("box needs lo <= hi with matching shapes")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def diameter(self):
        return float(np.linalg.norm(np.maximum(np.abs(self.lo), np.abs(self.hi))))

    def project(self, y):
        return np.minimum(np.maximum(np.asarray(y, dtype=float), self.lo), self.hi)

    def kernel_args(self, dim):
        lo = np.broadcast_to(self.lo, (dim,)).astype(float)
        hi = np.broadcast_to(self.hi, (dim,)).astype(float)
        return 1, 0.0, lo, hi

    def contains(self, y, tol=1e-12):
        y = np.asarray(y)
        return bool(np.all(y >= self.lo - tol) and np.all(y <= self.hi + tol))


# ---------------------------------------------------------------- cost models

class LogisticCost:
    """Per-node l2-regularised logistic loss.

    ``samples[i, j]`` holds c_ij = (b_ij * a_ij, b_ij), so the margin of sample
    j at node i is c_ij . x, with the intercept stored in the last coordinate.
    """

    kind = "logistic"

    def __init__(self, samples, R):
        S = np.ascontiguousarray(samples, dtype=float)
        if S.ndim != 3:
            raise ModelError("samples must have shape (nodes, per_node, dim)")
        if not R > 0:
            raise ModelError("regulariser R must be positive")
        S.setflags(write=False)
        self.samples = S
        self.R = float(R)
        self._flat = np.ascontiguousarray(S.reshape(-1, S.shape[2]))

    @classmethod
    def from_shards(cls, features, labels, R):
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=float)
        c = np.concatenate([labels[..., None] * features, labels[..., None]], axis=-1)
        return cls(c, R)

    @property
    def n_nodes(self):
        return self.samples.shape[0]

    @property
    def dim(self):
        return self.samples.shape[2]

    @property
    def mu(self):
        return self.R

    def lipschitz(self, mode="per_node"):
        S = self.samples
        if mode == "per_node":
            per = [np.linalg.norm(S[i].T @ S[i], 2) for i in range(self.n_nodes)]
            return 0.25 * max(per) + self.R
        if mode == "pooled":
            return 0.25 * np.linalg.norm(self._flat.T @ self._flat, 2) / self.n_nodes + self.R
        raise ModelError(f"unknown Lipschitz formula {mode!r}")

    def evaluate(self, node, x):
        x = np.asarray(x, dtype=float)
        c = self.samples[node]
        t = c @ x
        value = float(kernels.numpy_impl.softplus(-t).sum() + 0.5 * self.R * x @ x)
        grad = -(kernels.numpy_impl.sigmoid(-t) @ c) + self.R * x
        return value, grad

    def gradients(self, X):
        return kernels.logistic_gradients(X, self.samples, self.R)

    def local_values(self, X):
        return kernels.logistic_local_values(X, self.samples, self.R)

    def cross_values(self, X):
        """f(x) = sum_i f_i(x) evaluated at every row of X."""
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        return kernels.logistic_cross_values(X, self._flat, self.R, self.n_nodes)

    def total_value(self, x):
        return float(self.cross_values(np.asarray(x, dtype=float)[None, :])[0])

    def total_gradient(self, x):
        X = np.broadcast_to(np.asarray(x, dtype=float), (self.n_nodes, self.dim)).copy()
        return self.gradients(X).sum(axis=0)


class QuadraticCost:
    """f_i(x) = 0.5 * ||x - b_i||^2 (identity Hessians, mu = L = 1)."""

    kind = "quadratic"
    mu = 1.0

    def __init__(self, centers):
        B = np.array(centers, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        B.setflags(write=False)
        self.centers = B

    @property
    def n_nodes(self):
        return self.centers.shape[0]

    @property
    def dim(self):
        return self.centers.shape[1]

    def lipschitz(self, mode="per_node"):
        return 1.0

    def evaluate(self, node, x):
        r = np.asarray(x, dtype=float) - self.centers[node]
        return float(0.5 * r @ r), r

    def gradients(self, X):
        return X - self.centers

    def local_values(self, X):
        r = X - self.centers
        return 0.5 * np.einsum("id,id->i", r, r)

    def cross_values(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        diff = X[:, None, :] - self.centers[None, :, :]
        return 0.5 * np.einsum("mnd,mnd->m", diff, diff)

    def total_value(self, x):
        return float(self.cross_values(np.asarray(x, dtype=float)[None, :])[0])

    def total_gradient(self, x):
        return self.n_nodes * np.asarray(x, dtype=float) - self.centers.sum(axis=0)


# ---------------------------------------------------------------- problem instance

@dataclass(frozen=True, eq=False)
class ProblemInstance:
    model: object
    constraint: object
    mu: float
    lipschitz_L: float
    grad_bound_G: float
    diameter_D: float
    f_upper_Mf: float
    f_lower_mf: float
    lipschitz_mode: str = "per_node"

    @property
    def n_nodes(self):
        return self.model.n_nodes

    @property
    def dim(self):
        return self.model.dim

    def project(self, Y):
        return self.constraint.project(Y)

    @property
    def kernel_projection(self):
        return self.constraint.kernel_args(self.dim)


def derive_constants(model, constraint, lipschitz="per_node"):
    """Strong convexity, Lipschitz, gradient and value bounds over the set.

    G = L*D + max_i ||grad f_i(0)|| and M_f = -m_f = G*D + max_i |f_i(0)|.
    ``lipschitz`` picks the Lipschitz formula for logistic models:
    ``"per_node"`` (max over nodes, always a valid bound) or ``"pooled"``
    (network-averaged curvature).
    """
    mu = float(model.mu)
    L = float(model.lipschitz(lipschitz))
    if L < mu * (1 - 1e-12):
        raise ModelError(f"Lipschitz constant {L} is below strong convexity {mu}")
    L = max(L, mu)
    D = constraint.diameter
    zero = np.zeros(model.dim)
    g0 = max(np.linalg.norm(model.evaluate(i, zero)[1]) for i in range(model.n_nodes))
    f0 = max(abs(model.evaluate(i, zero)[0]) for i in range(model.n_nodes))
    G = L * D + g0
    Mf = G * D + f0
    return ProblemInstance(model=model, constraint=constraint, mu=mu, lipschitz_L=L,
                           grad_bound_G=float(G), diameter_D=float(D), f_upper_Mf=float(Mf),
                           f_lower_mf=float(-Mf), lipschitz_mode=lipschitz)


def logistic_margin_value(t):
    """log(1 + exp(-t)) for a scalar margin (stable)."""
    return float(kernels.numpy_impl.softplus(-np.asarray(t, dtype=float)))


__all__ = ["Ball", "Box", "LogisticCost", "QuadraticCost", "ProblemInstance",
           "derive_constants", "ModelError", "logistic_margin_value"]
