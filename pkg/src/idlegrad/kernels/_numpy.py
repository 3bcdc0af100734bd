"""Pure-numpy kernels. Reference path and fallback when numba is off."""
import numpy as np

EXP_CUTOFF = 30.0


def softplus(a):
    """log(1 + exp(a)) without overflow."""
    a = np.asarray(a, dtype=float)
    big = a > EXP_CUTOFF
    safe = np.where(big, 0.0, a)
    return np.where(big, a + np.log1p(np.exp(-np.where(big, a, 0.0))), np.log1p(np.exp(safe)))


def sigmoid(t):
    t = np.asarray(t, dtype=float)
    e = np.exp(-np.abs(t))
    return np.where(t >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logistic_gradients(X, S, R):
    # S[i, j] = c_ij; margin t = c_ij . x_i, weight sigma(-t)
    t = np.einsum("ijd,id->ij", S, X)
    wts = sigmoid(-t)
    return -np.einsum("ij,ijd->id", wts, S) + R * X


def logistic_local_values(X, S, R):
    t = np.einsum("ijd,id->ij", S, X)
    return softplus(-t).sum(axis=1) + 0.5 * R * np.einsum("id,id->i", X, X)


def logistic_cross_values(X, Sflat, R, n_nodes):
    t = X @ Sflat.T
    return softplus(-t).sum(axis=1) + 0.5 * n_nodes * R * np.einsum("id,id->i", X, X)


def project_rows(Y, proj_kind, radius, lo, hi):
    if proj_kind == 0:
        norms = np.sqrt(np.einsum("id,id->i", Y, Y))
        scale = np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
        return Y * scale[:, None]
    return np.minimum(np.maximum(Y, lo), hi)


def consensus_step(X, G, active, link_up, ptr, idx, w, eid, gscale, proj_kind, radius, lo, hi):
    n = X.shape[0]
    rows = np.repeat(np.arange(n), np.diff(ptr))
    keep = active[rows] & active[idx] & link_up[eid]
    M = np.zeros((n, n))
    M[rows, idx] = np.where(keep, w, 0.0)
    s = M.sum(axis=1)
    Y = (1.0 - s)[:, None] * X + M @ X - gscale[:, None] * G
    Y = project_rows(Y, proj_kind, radius, lo, hi)
    return np.where(active[:, None], Y, X)
