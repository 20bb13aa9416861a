"""Exact partition functions on small graphs.

Two unrelated algorithms compute ln Z_beta(G):

* enumeration of all k^n assignments into an integer histogram of the
  Hamiltonian, followed by a compensated log-sum-exp;
* the random-cluster expansion Z = sum_{A ⊆ E} (e^{-beta} - 1)^{|A|} k^{c(A)},
  accumulated from integer (|A|, c(A)) counts in 50-digit arithmetic.

Both are exact up to the final floating-point rounding, which makes them a
mutual oracle for everything else in the package.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from . import kernels
from .errors import CapacityError, ParameterError
from .model import ColorAssignment, SimpleGraph, balance_window

ENUM_GUARD = 10**8
GIBBS_GUARD = 10**6
FK_EDGE_GUARD = 26
_BLOCK = 1 << 20


@dataclass(frozen=True)
class PartitionValue:
    log_z: float
    method: str
    energy_counts: np.ndarray | None = field(default=None, repr=False, compare=False)


def _check_args(k, beta):
    if int(k) != k or k < 2:
        raise ParameterError(f"k must be an integer >= 2, got {k}")
    if not beta >= 0:
        raise ParameterError(f"beta must be >= 0, got {beta}")


def _check_enum(n, k, guard):
    if k**n > guard:
        raise CapacityError(f"k^n = {k}^{n} exceeds the enumeration guard {guard:.0e}")


def energy_histograms(G: SimpleGraph, k: int, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Integer counts of assignments by H, for all and for balanced assignments.

    Vertex 0 is pinned to color 0 and the counts multiplied by k; both H and
    balancedness are invariant under color permutations.  Blocks of the
    index range are independent, and integer addition makes the reduction
    order irrelevant.
    """
    _check_enum(G.n, k, ENUM_GUARD)
    return _histograms_cached(G, k, max(1, int(threads)))


@lru_cache(maxsize=64)
def _histograms_cached(G, k, threads):
    n = G.n
    indptr, indices = G.csr
    ok = balance_window(n, k)
    total = k ** (n - 1)
    blocks = [(s, min(s + _BLOCK, total)) for s in range(0, total, _BLOCK)]

    def run(b):
        return kernels.energy_histogram(n, k, indptr, indices, G.num_edges, ok, 1, b[0], b[1])

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    h_all = sum(p[0] for p in parts) * k
    h_bal = sum(p[1] for p in parts) * k
    h_all.setflags(write=False)
    h_bal.setflags(write=False)
    return h_all, h_bal


def _penalty(beta, h):
    """beta * h with 0 * inf taken as 0, so beta = inf keeps only h = 0."""
    beta, h = np.broadcast_arrays(np.asarray(beta, dtype=float), np.asarray(h, dtype=float))
    return np.multiply(beta, h, out=np.zeros(beta.shape), where=h > 0)


def log_sum_counts(counts: np.ndarray, beta: float) -> float:
    """ln sum_h counts[h] exp(-beta h), shifted and summed with math.fsum."""
    h = np.nonzero(counts)[0]
    if h.size == 0:
        return -math.inf
    t = np.log(counts[h].astype(float)) - _penalty(beta, h)
    top = t.max()
    if top == -math.inf:  # beta = inf and no zero-energy assignment
        return -math.inf
    return float(top + math.log(math.fsum(np.exp(t - top))))


def mean_energy_from_counts(counts: np.ndarray, beta) -> np.ndarray | float:
    """<H>_beta from a histogram; ``beta`` may be an array."""
    h = np.nonzero(counts)[0]
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    t = np.log(counts[h].astype(float))[None, :] - _penalty(b[:, None], h[None, :])
    t -= t.max(axis=1, keepdims=True)
    w = np.exp(t)
    out = (w * h).sum(axis=1) / w.sum(axis=1)
    return float(out[0]) if np.ndim(beta) == 0 else out


def z_enumerate(G: SimpleGraph, k: int, beta: float, threads: int = 1) -> PartitionValue:
    _check_args(k, beta)
    h_all, _ = energy_histograms(G, k, threads)
    return PartitionValue(log_sum_counts(h_all, beta), "enumeration", h_all)


def z_balanced(G: SimpleGraph, k: int, beta: float, threads: int = 1) -> PartitionValue:
    """Partition function restricted to balanced assignments."""
    _check_args(k, beta)
    _, h_bal = energy_histograms(G, k, threads)
    return PartitionValue(log_sum_counts(h_bal, beta), "enumeration-balanced", h_bal)


def fk_table(G: SimpleGraph) -> np.ndarray:
    if G.num_edges > FK_EDGE_GUARD:
        raise CapacityError(f"|E| = {G.num_edges} exceeds the FK guard {FK_EDGE_GUARD}")
    return kernels.fk_counts(G.n, G.edges[:, 0], G.edges[:, 1])


def z_fk(G: SimpleGraph, k: int, beta: float) -> PartitionValue:
    """ln Z from the random-cluster expansion.

    Terms with odd |A| are negative.  Positive and negative parts are summed
    separately in 50-digit precision and subtracted once.
    """
    _check_args(k, beta)
    table = fk_table(G)
    with mpmath.workdps(50):
        v = mpmath.expm1(-mpmath.mpf(beta))
        kk = mpmath.mpf(k)
        pos = mpmath.mpf(0)
        neg = mpmath.mpf(0)
        for j, c in zip(*np.nonzero(table)):
            term = int(table[j, c]) * (v ** int(j)) * kk ** int(c)
            if j % 2:
                neg += term
            else:
                pos += term
        z = pos + neg
        log_z = float(mpmath.log(z))
    return PartitionValue(log_z, "fk-expansion")


@dataclass(frozen=True)
class GibbsTable:
    """Exact Gibbs probabilities indexed by assignment index."""

    n: int
    k: int
    beta: float
    probs: np.ndarray
    energies: np.ndarray
    log_z: float

    def assignment(self, idx: int) -> ColorAssignment:
        return ColorAssignment.from_index(idx, self.n, self.k)

    def mean_energy(self) -> float:
        return float(np.dot(self.probs, self.energies))

    def prob(self, sigma: ColorAssignment) -> float:
        return float(self.probs[sigma.index()])


def gibbs_exact(G: SimpleGraph, k: int, beta: float) -> GibbsTable:
    _check_args(k, beta)
    _check_enum(G.n, k, GIBBS_GUARD)
    indptr, indices = G.csr
    H = kernels.energy_table(G.n, k, indptr, indices)
    logw = -beta * H.astype(float)
    top = logw.max()
    w = np.exp(logw - top)
    s = math.fsum(w)
    return GibbsTable(G.n, k, float(beta), w / s, H, float(top + math.log(s)))
