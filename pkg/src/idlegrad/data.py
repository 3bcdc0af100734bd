"""Synthetic classification data, LIBSVM text ingestion, and node partitioning."""
from __future__ import annotations

import io
from dataclasses import dataclass
from importlib import resources

import numpy as np


class DataError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense features (n_points, dim_minus_1) with labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.array(self.features, dtype=float, ndmin=2)
        y = np.asarray(self.labels, dtype=float).ravel()
        if X.shape[0] != y.shape[0] and not (y.size == 0 and X.size == 0):
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if y.size and not np.all(np.abs(y) == 1.0):
            raise DataError("labels must be -1 or +1")
        if y.size == 0:
            X = X.reshape(0, X.shape[1] if X.ndim == 2 and X.shape[0] else 0)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        """Optimisation dimension d (features plus intercept)."""
        return self.features.shape[1] + 1


@dataclass(frozen=True, eq=False)
class NodeShards:
    """Equal-size per-node blocks: features (N, J, d-1), labels (N, J)."""

    features: np.ndarray
    labels: np.ndarray

    @property
    def n_nodes(self):
        return self.features.shape[0]

    @property
    def per_node(self):
        return self.features.shape[1]


def gen_synthetic(n_nodes, j_per_node, dim_minus_1, noise_sd, rng):
    """Gaussian features with labels from a random linear model plus noise.

    Returns the shards and the generating vector (weights, intercept last).
    """
    if min(n_nodes, j_per_node, dim_minus_1) < 1 or noise_sd < 0:
        raise DataError("counts must be positive and noise_sd nonnegative")
    A = rng.standard_normal((n_nodes, j_per_node, dim_minus_1))
    true_x = rng.standard_normal(dim_minus_1 + 1)
    eps = noise_sd * rng.standard_normal((n_nodes, j_per_node))
    score = A @ true_x[:-1] + true_x[-1] + eps
    labels = np.where(score >= 0, 1.0, -1.0)
    return NodeShards(A, labels), true_x


def parse_libsvm(text, dim=None):
    """Parse ``<label> <idx>:<val> ...`` lines into a dense :class:`Dataset`.

    Indices are 1-based. ``dim`` fixes the feature count; otherwise the largest
    index seen is used. Errors name the offending line.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    labels, rows, max_idx = [], [], 0
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise DataError(f"line {lineno}: bad label {tokens[0]!r}") from None
        if label not in (1.0, -1.0):
            raise DataError(f"line {lineno}: label must be +1 or -1, got {tokens[0]!r}")
        entries = {}
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataError(f"line {lineno}: expected idx:value, got {tok!r}")
            try:
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise DataError(f"line {lineno}: malformed pair {tok!r}") from None
            if idx < 1:
                raise DataError(f"line {lineno}: feature index must be >= 1, got {idx}")
            if idx in entries:
                raise DataError(f"line {lineno}: duplicate feature index {idx}")
            entries[idx] = val
        if entries:
            max_idx = max(max_idx, max(entries))
        labels.append(label)
        rows.append(entries)
    width = max_idx if dim is None else int(dim)
    if max_idx > width:
        raise DataError(f"feature index {max_idx} exceeds configured dimension {width}")
    X = np.zeros((len(rows), width))
    for r, entries in enumerate(rows):
        for idx, val in entries.items():
            X[r, idx - 1] = val
    return Dataset(X, np.asarray(labels))


def serialize_libsvm(ds):
    """Inverse of :func:`parse_libsvm`; zero entries are omitted."""
    out = []
    for x, y in zip(ds.features, ds.labels):
        parts = ["+1" if y > 0 else "-1"]
        parts += [f"{q + 1}:{float(v)!r}" for q, v in enumerate(x) if v != 0.0]
        out.append(" ".join(parts))
    return "\n".join(out) + ("\n" if out else "")


def load_libsvm(path, dim=None):
    with open(path, "rb") as fh:
        return parse_libsvm(fh.read(), dim=dim)


def bundled_fixture(dim=119):
    """Small a1a-shaped stand-in shipped with the package (not the real a1a)."""
    text = resources.files("idlegrad").joinpath("fixtures/mini_a1a.libsvm").read_text()
    return parse_libsvm(text, dim=dim)


def partition(ds, n_nodes, shuffle_rng=None):
    """Split into equal contiguous blocks, dropping the trailing remainder.

    With ``shuffle_rng`` the kept points are permuted before blocking.
    """
    if n_nodes < 1:
        raise DataError("n_nodes must be >= 1")
    if len(ds) < n_nodes:
        raise DataError(f"{len(ds)} points cannot fill {n_nodes} nodes")
    per = len(ds) // n_nodes
    keep = per * n_nodes
    X, y = ds.features[:keep], ds.labels[:keep]
    if shuffle_rng is not None:
        perm = shuffle_rng.permutation(keep)
        X, y = X[perm], y[perm]
    return NodeShards(X.reshape(n_nodes, per, -1).copy(), y.reshape(n_nodes, per).copy())
