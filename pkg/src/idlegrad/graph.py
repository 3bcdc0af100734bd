"""Communication graphs and doubly stochastic consensus weights."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq


class GraphError(ValueError):
    pass


def _normalize_edges(n, edges):
    out = set()
    for a, b in edges:
        a, b = int(a), int(b)
        if a == b:
            raise GraphError(f"self-loop at node {a}")
        if not (0 <= a < n and 0 <= b < n):
            raise GraphError(f"edge ({a}, {b}) out of range for n={n}")
        e = (a, b) if a < b else (b, a)
        if e in out:
            raise GraphError(f"duplicate edge {e}")
        out.add(e)
    return tuple(sorted(out))


def _connected(n, edges):
    nbrs = [[] for _ in range(n)]
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return bool(seen.all())


def laplacian_matrix(n, edges):
    """Zero-one graph Laplacian; no connectivity requirement."""
    L = np.zeros((n, n))
    for a, b in edges:
        L[a, b] = L[b, a] = -1.0
        L[a, a] += 1.0
        L[b, b] += 1.0
    return L


@dataclass(frozen=True)
class Network:
    """Connected, simple, undirected graph on nodes ``0..n-1``."""

    n: int
    edges: tuple
    positions: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise GraphError("a network needs at least 2 nodes")
        object.__setattr__(self, "edges", _normalize_edges(self.n, self.edges))
        if not _connected(self.n, self.edges):
            raise GraphError("network is not connected")

    @property
    def m(self):
        return len(self.edges)

    @cached_property
    def degrees(self):
        deg = np.zeros(self.n, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    @cached_property
    def neighbors(self):
        nbrs = [[] for _ in range(self.n)]
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        return tuple(tuple(sorted(v)) for v in nbrs)

    def adjacency(self):
        A = np.zeros((self.n, self.n))
        for a, b in self.edges:
            A[a, b] = A[b, a] = 1.0
        return A

    def laplacian(self):
        return laplacian_matrix(self.n, self.edges)


def path_graph(n):
    return Network(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    return Network(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n):
    return Network(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_geometric_graph(n, radius, rng, max_attempts=1000):
    """Uniform points in the unit square, edge iff distance < radius.

    Placement is redrawn until the graph is connected; raises
    :class:`GraphError` once ``max_attempts`` placements have failed.
    """
    if n < 2:
        raise GraphError("n must be >= 2")
    if not (0.0 < radius <= math.sqrt(2.0)):
        raise GraphError("radius must lie in (0, sqrt(2)]")
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_attempts):
        pos = rng.random((n, 2))
        dist = np.sqrt(((pos[iu] - pos[ju]) ** 2).sum(axis=1))
        mask = dist < radius
        edges = list(zip(iu[mask].tolist(), ju[mask].tolist()))
        if _connected(n, edges):
            return Network(n, edges, positions=pos)
    raise GraphError(
        f"no connected graph after {max_attempts} placements (n={n}, radius={radius}); "
        "the radius is probably too small"
    )


def _unit_square_distance_cdf(r):
    # P(|U - V| < r) for U, V uniform on the unit square, valid for 0 <= r <= 1
    return math.pi * r**2 - 8.0 / 3.0 * r**3 + 0.5 * r**4


def radius_for_edge_count(n, m):
    """Radius whose expected edge count (before conditioning on connectivity) is m."""
    pairs = n * (n - 1) / 2
    target = m / pairs
    if not (0 < target < _unit_square_distance_cdf(1.0)):
        raise GraphError(f"{m} edges on {n} nodes is outside the supported range (radius <= 1)")
    return brentq(lambda r: _unit_square_distance_cdf(r) - target, 1e-9, 1.0, xtol=1e-14)


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric stochastic weights C on a network, positive diagonal.

    Positive definiteness is not enforced here (Metropolis weights need not be
    positive definite); see :func:`ensure_positive_definite`.
    """

    entries: np.ndarray
    network: Network = field(repr=False)

    def __post_init__(self):
        C = np.array(self.entries, dtype=float)
        n = self.network.n
        if C.shape != (n, n):
            raise GraphError(f"weight matrix shape {C.shape} does not match n={n}")
        if np.max(np.abs(C - C.T)) > 1e-14:
            raise GraphError("weight matrix is not symmetric")
        if np.max(np.abs(C.sum(axis=1) - 1.0)) > 1e-12:
            raise GraphError("weight matrix rows do not sum to 1")
        if C.min() < 0:
            raise GraphError("weight matrix has negative entries")
        if np.any(np.diag(C) <= 0):
            raise GraphError("weight matrix diagonal must be strictly positive")
        A = self.network.adjacency() > 0
        off = ~np.eye(n, dtype=bool)
        if np.any((C[off] > 0) != A[off]):
            raise GraphError("weight sparsity pattern does not match the network edges")
        C.setflags(write=False)
        object.__setattr__(self, "entries", C)

    @property
    def n(self):
        return self.network.n

    @cached_property
    def eigenvalues(self):
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.entries)[::-1]

    @property
    def lambda2(self):
        return float(self.eigenvalues[1])

    @property
    def lambdaN(self):
        return float(self.eigenvalues[-1])

    @property
    def is_positive_definite(self):
        return self.lambdaN > 0

    @cached_property
    def csr(self):
        """Neighbour lists as flat arrays: (ptr, idx, weight, edge_id)."""
        net = self.network
        eid_of = {e: k for k, e in enumerate(net.edges)}
        ptr = np.zeros(net.n + 1, dtype=np.int64)
        idx, w, eid = [], [], []
        for i in range(net.n):
            for j in net.neighbors[i]:
                idx.append(j)
                w.append(self.entries[i, j])
                eid.append(eid_of[(i, j) if i < j else (j, i)])
            ptr[i + 1] = len(idx)
        return (ptr, np.asarray(idx, dtype=np.int64), np.asarray(w, dtype=float),
                np.asarray(eid, dtype=np.int64))


def metropolis_weights(net):
    """C_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal fills rows to 1."""
    deg = net.degrees
    C = np.zeros((net.n, net.n))
    for a, b in net.edges:
        C[a, b] = C[b, a] = 1.0 / (1.0 + max(deg[a], deg[b]))
    np.fill_diagonal(C, 1.0 - C.sum(axis=1))
    return WeightMatrix(C, net)


def equal_weights(net, c0):
    """C = I - c0 * Laplacian; needs c0 * max degree < 1 for a positive diagonal."""
    if c0 <= 0 or c0 * net.degrees.max() >= 1:
        raise GraphError("equal weights need 0 < c0 < 1 / max degree")
    return WeightMatrix(np.eye(net.n) - c0 * net.laplacian(), net)


def ensure_positive_definite(c, kappa=0.1):
    """Shift ``c`` to ((1+kappa)/2) I + ((1-kappa)/2) c so that lambda_N > kappa."""
    if not (0 < kappa < 1):
        raise GraphError("kappa must lie in (0, 1)")
    n = c.n
    return WeightMatrix(0.5 * (1 + kappa) * np.eye(n) + 0.5 * (1 - kappa) * c.entries, c.network)


@dataclass(frozen=True)
class Spectrum:
    lambda2_C: float
    lambdaN_C: float
    laplacian_eigs: np.ndarray  # ascending

    @property
    def lambda2_L(self):
        return float(self.laplacian_eigs[1])


def spectral_quantities(c, c0=None):
    """lambda_2(C), lambda_N(C) and the ascending 0/1-Laplacian spectrum."""
    if c0 is not None and (c0 <= 0 or c0 * c.network.degrees.max() > 1):
        raise GraphError("c0 must satisfy 0 < c0 * max degree <= 1")
    try:
        eig_c = np.linalg.eigvalsh(c.entries)
        eig_l = np.linalg.eigvalsh(c.network.laplacian())
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise GraphError(f"eigensolver did not converge: {exc}") from exc
    eig_l = np.where(np.abs(eig_l) < 1e-10, 0.0, eig_l)
    return Spectrum(lambda2_C=float(eig_c[-2]), lambdaN_C=float(eig_c[0]), laplacian_eigs=eig_l)


def write_edgelist(net, fh):
    fh.write(f"{net.n} {net.m}\n")
    for a, b in net.edges:
        fh.write(f"{a} {b}\n")


def read_edgelist(fh):
    lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise GraphError("empty edge-list file")
    try:
        n, m = (int(v) for v in lines[0].split())
        edges = [tuple(int(v) for v in ln.split()) for ln in lines[1:]]
    except ValueError as exc:
        raise GraphError(f"malformed edge list: {exc}") from exc
    if len(edges) != m or any(len(e) != 2 for e in edges):
        raise GraphError(f"header announces {m} edges, found {len(edges)}")
    return Network(n, edges)
