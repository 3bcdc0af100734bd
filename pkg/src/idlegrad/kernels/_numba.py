"""numba-compiled kernels; same signatures as the numpy ones."""
import math

import numpy as np
from numba import njit

EXP_CUTOFF = 30.0


@njit(cache=True)
def _softplus(a):
    if a > EXP_CUTOFF:
        return a + math.log1p(math.exp(-a))
    return math.log1p(math.exp(a))


@njit(cache=True)
def _sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@njit(cache=True)
def softplus(a):
    out = np.empty(a.shape)
    fa = a.ravel()
    fo = out.ravel()
    for k in range(fa.size):
        fo[k] = _softplus(fa[k])
    return out


@njit(cache=True)
def sigmoid(t):
    out = np.empty(t.shape)
    ft = t.ravel()
    fo = out.ravel()
    for k in range(ft.size):
        fo[k] = _sigmoid(ft[k])
    return out


@njit(cache=True)
def logistic_gradients(X, S, R):
    n, d = X.shape
    J = S.shape[1]
    G = np.empty((n, d))
    for i in range(n):
        for q in range(d):
            G[i, q] = R * X[i, q]
        for j in range(J):
            t = 0.0
            for q in range(d):
                t += S[i, j, q] * X[i, q]
            wt = _sigmoid(-t)
            for q in range(d):
                G[i, q] -= wt * S[i, j, q]
    return G


@njit(cache=True)
def logistic_local_values(X, S, R):
    n, d = X.shape
    J = S.shape[1]
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        sq = 0.0
        for q in range(d):
            sq += X[i, q] * X[i, q]
        for j in range(J):
            t = 0.0
            for q in range(d):
                t += S[i, j, q] * X[i, q]
            acc += _softplus(-t)
        out[i] = acc + 0.5 * R * sq
    return out


@njit(cache=True)
def logistic_cross_values(X, Sflat, R, n_nodes):
    m, d = X.shape
    ns = Sflat.shape[0]
    out = np.empty(m)
    for i in range(m):
        acc = 0.0
        sq = 0.0
        for q in range(d):
            sq += X[i, q] * X[i, q]
        for s in range(ns):
            t = 0.0
            for q in range(d):
                t += Sflat[s, q] * X[i, q]
            acc += _softplus(-t)
        out[i] = acc + 0.5 * n_nodes * R * sq
    return out


@njit(cache=True)
def project_rows(Y, proj_kind, radius, lo, hi):
    n, d = Y.shape
    out = np.empty((n, d))
    for i in range(n):
        if proj_kind == 0:
            nrm = 0.0
            for q in range(d):
                nrm += Y[i, q] * Y[i, q]
            nrm = math.sqrt(nrm)
            scale = radius / nrm if nrm > radius else 1.0
            for q in range(d):
                out[i, q] = Y[i, q] * scale
        else:
            for q in range(d):
                out[i, q] = min(max(Y[i, q], lo[q]), hi[q])
    return out


@njit(cache=True)
def consensus_step(X, G, active, link_up, ptr, idx, w, eid, gscale, proj_kind, radius, lo, hi):
    n, d = X.shape
    out = np.empty((n, d))
    y = np.empty(d)
    acc = np.empty(d)
    for i in range(n):
        if not active[i]:
            for q in range(d):
                out[i, q] = X[i, q]
            continue
        s = 0.0
        for q in range(d):
            acc[q] = 0.0
        for k in range(ptr[i], ptr[i + 1]):
            j = idx[k]
            if active[j] and link_up[eid[k]]:
                s += w[k]
                for q in range(d):
                    acc[q] += w[k] * X[j, q]
        for q in range(d):
            y[q] = (1.0 - s) * X[i, q] + acc[q] - gscale[i] * G[i, q]
        if proj_kind == 0:
            nrm = 0.0
            for q in range(d):
                nrm += y[q] * y[q]
            nrm = math.sqrt(nrm)
            scale = radius / nrm if nrm > radius else 1.0
            for q in range(d):
                out[i, q] = y[q] * scale
        else:
            for q in range(d):
                out[i, q] = min(max(y[q], lo[q]), hi[q])
    return out
