"""Numba kernels vs their numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py [--quick]``.  Each kernel is
called once untimed (JIT warmup), then timed as the best of a few repeats.
Outputs of the two paths are compared before anything is timed.
"""

import argparse
import time

import numpy as np

from pottslab import kernels
from pottslab.ensembles import gnm
from pottslab.model import balance_window


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def case_histogram(n, k):
    G = gnm(n, int(1.5 * n), 1)
    indptr, indices = G.csr
    ok = balance_window(n, k)
    total = k ** (n - 1)
    args = (n, k, indptr, indices, G.num_edges, ok, 1, 0, total)
    return f"energy_histogram n={n} k={k}", kernels.energy_histogram_nb, kernels.energy_histogram_np, args


def case_fk(n, m):
    G = gnm(n, m, 2)
    args = (n, G.edges[:, 0].copy(), G.edges[:, 1].copy())
    return f"fk_counts n={n} m={m}", kernels.fk_counts_nb, kernels.fk_counts_np, args


def case_chain(name, n, k, beta, steps):
    G = gnm(n, int(1.5 * n), 3)
    indptr, indices = G.csr
    gen = np.random.default_rng(4)
    col = gen.integers(0, k, size=n)
    boltz = np.exp(-beta * np.arange(int(G.degrees().max()) + 2, dtype=float))
    per = 1 if name == "heat_bath" else 2
    uv, uc = gen.random(steps), gen.random(per * steps)
    energy = int(np.sum(col[G.edges[:, 0]] == col[G.edges[:, 1]]))
    empty = np.empty(0, dtype=np.int64)
    powk = k ** np.arange(n, dtype=np.int64) if n < 30 else np.zeros(n, dtype=np.int64)
    nb, npf = getattr(kernels, name + "_nb"), getattr(kernels, name + "_np")

    # kernels mutate the color array, so each call gets a fresh copy
    def wrap(f):
        return lambda *a: f(indptr, indices, col.copy(), k, boltz, uv, uc, energy, empty, empty, powk)

    return f"{name} n={n} k={k} steps={steps}", wrap(nb), wrap(npf), ()


def case_dykstra(k):
    gen = np.random.default_rng(5)
    M = gen.random((k, k))
    args = (M, np.zeros((k, k)), np.full((k, k), 0.51), 1e-10, 100000)
    return f"dykstra k={k}", kernels.dykstra_nb, kernels.dykstra_np, args


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, rtol=1e-9, atol=1e-12)
    return np.isclose(a, b, rtol=1e-9, atol=1e-12)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    q = args.quick
    cases = [
        case_histogram(9 if q else 12, 3),
        case_fk(10, 14 if q else 18),
        case_chain("heat_bath", 200, 3, 1.0, 20000 if q else 200000),
        case_chain("metropolis", 200, 3, 1.0, 20000 if q else 200000),
        case_dykstra(20 if q else 50),
    ]
    print(f"{'kernel':44s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  match")
    for label, nb, npf, a in cases:
        r_nb, r_np = nb(*a), npf(*a)
        ok = same(r_nb, r_np)
        t_nb = best_of(lambda: nb(*a), args.repeats)
        t_np = best_of(lambda: npf(*a), args.repeats)
        print(f"{label:44s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}  {'yes' if ok else 'NO'}")


if __name__ == "__main__":
    main()
