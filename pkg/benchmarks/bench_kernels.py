"""Time the numba kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 200]

Also runs a short end-to-end idling run under each backend in a subprocess,
since the backend is fixed at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from idlegrad import graph
from idlegrad.kernels import numba_impl, numpy_impl
from idlegrad.schedule import stream

E2E = """
import time, warnings
from idlegrad import experiments as ex
cfg = ex.validate_config({"preset": "fig1", "replicas": 2, "algorithms": ["idling"]})
pb = ex.build_problem(cfg)
ex.run_replica(cfg, pb, "idling", 0)
t = time.perf_counter()
ex.run_replica(cfg, pb, "idling", 1)
print(time.perf_counter() - t)
"""


def kernel_inputs(n=50, per_node=2, dim=4):
    rng = stream(0, 0, "graph")
    net = graph.random_geometric_graph(n, graph.radius_for_edge_count(n, 214), rng)
    ptr, idx, w, eid = graph.metropolis_weights(net).csr
    X = rng.uniform(-50, 50, size=(n, dim))
    S = rng.standard_normal((n, per_node, dim))
    active = rng.random(n) < 0.7
    link_up = np.ones(net.m, dtype=bool)
    gscale = np.full(n, 0.01)
    return X, S, active, link_up, ptr, idx, w, eid, gscale


def bench(repeat):
    X, S, active, link_up, ptr, idx, w, eid, gscale = kernel_inputs()
    z = np.zeros(X.shape[1])
    rows = []
    for name, impl in (("numpy", numpy_impl), ("numba", numba_impl)):
        if impl is None:
            continue
        G = impl.logistic_gradients(X, S, 0.1)
        impl.consensus_step(X, G, active, link_up, ptr, idx, w, eid, gscale, 0, 100.0, z, z)
        tg = timeit.timeit(lambda: impl.logistic_gradients(X, S, 0.1), number=repeat)
        tc = timeit.timeit(lambda: impl.consensus_step(X, G, active, link_up, ptr, idx, w, eid,
                                                       gscale, 0, 100.0, z, z), number=repeat)
        rows.append((name, 1e6 * tg / repeat, 1e6 * tc / repeat))
    return rows


def end_to_end(no_numba):
    env = dict(os.environ, IDLEGRAD_NO_NUMBA="1" if no_numba else "0")
    out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True,
                         check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()
    print(f"{'backend':8s} {'gradients us':>14s} {'consensus us':>14s}")
    for name, tg, tc in bench(args.repeat):
        print(f"{name:8s} {tg:14.1f} {tc:14.1f}")
    if not args.skip_e2e:
        for flag in (False, True):
            print(f"fig1 idling replica, {'numpy' if flag else 'numba'}: "
                  f"{end_to_end(flag):.2f} s")


if __name__ == "__main__":
    main()
