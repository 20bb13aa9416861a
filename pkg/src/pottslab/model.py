"""Core types and pure formulas for the Potts antiferromagnet.

Colors are stored 0-based (``0..k-1``); files and user-facing text use 1-based
colors.  All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, ParameterError

ROW_STOCHASTIC = "row-stochastic"
DOUBLY_STOCHASTIC = "doubly-stochastic"
OVERLAP_EMPIRICAL = "overlap-empirical"
_KINDS = (ROW_STOCHASTIC, DOUBLY_STOCHASTIC, OVERLAP_EMPIRICAL)


def edge_count(n: int, d: float) -> int:
    """m = ceil(d n / 2), robust to float noise in ``d * n``."""
    return math.ceil(round(d * n / 2.0, 9))


@dataclass(frozen=True)
class ModelParams:
    k: int
    n: int
    d: float
    beta: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ParameterError(f"k must be an integer >= 2, got {self.k}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be an integer >= 1, got {self.n}")
        if not self.d > 0 or not math.isfinite(self.d):
            raise ParameterError(f"d must be positive and finite, got {self.d}")
        if not self.beta >= 0 or not math.isfinite(self.beta):
            raise ParameterError(f"beta must be finite and >= 0, got {self.beta}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def m(self) -> int:
        return edge_count(self.n, self.d)

    @property
    def c_beta(self) -> float:
        return -math.expm1(-self.beta)

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    def with_(self, **changes) -> "ModelParams":
        kw = dict(k=self.k, n=self.n, d=self.d, beta=self.beta)
        kw.update(changes)
        return ModelParams(**kw)

    def as_dict(self) -> dict:
        return dict(k=self.k, n=self.n, d=self.d, beta=self.beta, m=self.m, c_beta=self.c_beta)


@dataclass(frozen=True, eq=False)
class SimpleGraph:
    """Vertices ``0..n-1`` and an ``(m, 2)`` array of edges with ``u < v``.

    Edges are kept sorted lexicographically; duplicates and self-loops are
    rejected.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ContractViolation("graph needs at least one vertex")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise ContractViolation("edge endpoint outside [n]")
        if np.any(e[:, 0] == e[:, 1]):
            raise ContractViolation("self-loops are not allowed")
        e = np.sort(e, axis=1)
        if e.shape[0]:
            order = np.lexsort((e[:, 1], e[:, 0]))
            e = e[order]
            if np.any(np.all(e[1:] == e[:-1], axis=1)):
                raise ContractViolation("duplicate edge")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Sequence[int]], dedupe: bool = False) -> "SimpleGraph":
        e = np.array([tuple(p) for p in pairs], dtype=np.int64).reshape(-1, 2)
        if dedupe and e.size:
            e = np.unique(np.sort(e, axis=1), axis=0)
        return cls(n, e)

    @classmethod
    def complete(cls, n: int) -> "SimpleGraph":
        u, v = np.triu_indices(n, 1)
        return cls(n, np.stack([u, v], axis=1))

    @classmethod
    def empty(cls, n: int) -> "SimpleGraph":
        return cls(n, np.zeros((0, 2), dtype=np.int64))

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) of the symmetric adjacency structure."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return indptr, np.ascontiguousarray(dst[order])

    def degrees(self) -> np.ndarray:
        return np.diff(self.csr[0])

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}

    def add_edge(self, u: int, v: int) -> "SimpleGraph":
        return SimpleGraph(self.n, np.vstack([self.edges, [[u, v]]]))

    def __eq__(self, other):
        return isinstance(other, SimpleGraph) and self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"SimpleGraph(n={self.n}, m={self.num_edges})"


def balance_window(n: int, k: int) -> np.ndarray:
    """``ok[s]`` is True iff a class of size s satisfies |s - n/k| <= sqrt(n).

    Decided in integers: (k s - n)^2 <= k^2 n, so ties count as balanced.
    """
    s = np.arange(n + 1, dtype=np.int64)
    return (k * s - n) ** 2 <= k * k * n


@dataclass(frozen=True, eq=False)
class ColorAssignment:
    colors: np.ndarray
    k: int

    def __post_init__(self):
        c = np.asarray(self.colors, dtype=np.int64).ravel()
        if c.size and (c.min() < 0 or c.max() >= self.k):
            raise ContractViolation(f"colors must lie in [0, {self.k})")
        c.setflags(write=False)
        object.__setattr__(self, "colors", c)

    @classmethod
    def from_one_based(cls, colors: Iterable[int], k: int) -> "ColorAssignment":
        return cls(np.asarray(list(colors), dtype=np.int64) - 1, k)

    @classmethod
    def from_index(cls, idx: int, n: int, k: int) -> "ColorAssignment":
        digits = [(idx // k**v) % k for v in range(n)]
        return cls(np.array(digits, dtype=np.int64), k)

    @property
    def n(self) -> int:
        return int(self.colors.size)

    @cached_property
    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.colors, minlength=self.k)

    @property
    def is_balanced(self) -> bool:
        return bool(balance_window(self.n, self.k)[self.class_sizes].all())

    def index(self) -> int:
        return int(sum(int(c) * self.k**v for v, c in enumerate(self.colors)))

    def permuted(self, perm: Sequence[int]) -> "ColorAssignment":
        """Relabel color c as perm[c]."""
        return ColorAssignment(np.asarray(perm)[self.colors], self.k)

    def one_based(self) -> list[int]:
        return (self.colors + 1).tolist()

    def __eq__(self, other):
        return isinstance(other, ColorAssignment) and self.k == other.k and np.array_equal(self.colors, other.colors)

    def __hash__(self):
        return hash((self.k, self.colors.tobytes()))


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    entries: np.ndarray
    kind: str = ROW_STOCHASTIC
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractViolation("stochastic matrix must be square")
        if self.kind not in _KINDS:
            raise ContractViolation(f"unknown kind {self.kind!r}")
        if np.any(a < 0):
            raise ContractViolation("negative entry")
        if self.kind in (ROW_STOCHASTIC, DOUBLY_STOCHASTIC):
            if np.abs(a.sum(axis=1) - 1).max() > self.tol:
                raise ContractViolation("row sums differ from 1")
        if self.kind == DOUBLY_STOCHASTIC and np.abs(a.sum(axis=0) - 1).max() > self.tol:
            raise ContractViolation("column sums differ from 1")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def frobenius_sq(self) -> float:
        return float((self.entries**2).sum())


# ---------------------------------------------------------------------------
# formulas
# ---------------------------------------------------------------------------


def _check_same_n(G: SimpleGraph, sigma: ColorAssignment):
    if sigma.n != G.n:
        raise ContractViolation(f"assignment has {sigma.n} vertices, graph has {G.n}")


def hamiltonian(G: SimpleGraph, sigma: ColorAssignment) -> int:
    """Number of monochromatic edges of G under sigma."""
    _check_same_n(G, sigma)
    c = sigma.colors
    return int(np.count_nonzero(c[G.edges[:, 0]] == c[G.edges[:, 1]]))


def class_edge_counts(G: SimpleGraph, sigma: ColorAssignment) -> np.ndarray:
    """Edges spanned by each color class; sums to ``hamiltonian(G, sigma)``."""
    _check_same_n(G, sigma)
    c = sigma.colors
    cu = c[G.edges[:, 0]]
    mono = cu == c[G.edges[:, 1]]
    return np.bincount(cu[mono], minlength=sigma.k)


def forb(sigma: ColorAssignment) -> int:
    """Monochromatic pairs of the complete graph: sum_i C(|class i|, 2)."""
    s = sigma.class_sizes
    return int((s * (s - 1) // 2).sum())


def overlap_counts(sigma: ColorAssignment, tau: ColorAssignment) -> np.ndarray:
    """``N[i, j] = |sigma^-1(i) ∩ tau^-1(j)|``."""
    if sigma.n != tau.n or sigma.k != tau.k:
        raise ContractViolation("overlap needs assignments with equal n and k")
    k = sigma.k
    return np.bincount(sigma.colors * k + tau.colors, minlength=k * k).reshape(k, k)


def overlap_matrix(sigma: ColorAssignment, tau: ColorAssignment) -> StochasticMatrix:
    N = overlap_counts(sigma, tau)
    return StochasticMatrix(N * (sigma.k / sigma.n), OVERLAP_EMPIRICAL)


def _xlogx(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a, dtype=float)
    pos = a > 0
    out[pos] = a[pos] * np.log(a[pos])
    return out


def entropy_vec(p) -> float:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ContractViolation("probability vector has a negative entry")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ContractViolation(f"probability vector sums to {p.sum()!r}")
    return float(-_xlogx(p).sum())


def entropy_matrix(rho) -> float:
    """-sum rho_ij ln rho_ij with 0 ln 0 = 0 (no normalization assumed)."""
    a = np.asarray(rho, dtype=float)
    if np.any(a < 0):
        raise ContractViolation("matrix has a negative entry")
    return float(-_xlogx(a).sum())


def binary_entropy(z: float) -> float:
    if not 0.0 <= z <= 1.0:
        raise ContractViolation(f"binary entropy argument {z} outside [0, 1]")
    if z == 0.0 or z == 1.0:
        return 0.0
    return -z * math.log(z) - (1.0 - z) * math.log1p(-z)


def entropy_bound_check(p, subset: Iterable[int], slack: float = 1e-12) -> bool:
    """H(p) <= h(q) + q ln|I| + (1 - q) ln(k - |I|), q = p(I)."""
    p = np.asarray(p, dtype=float)
    idx = np.unique(np.asarray(list(subset), dtype=np.int64))
    q = float(p[idx].sum())
    if not 0.0 < q < 1.0:
        raise ContractViolation(f"subset mass q={q} must lie in (0, 1)")
    k = p.size
    bound = binary_entropy(q) + q * math.log(idx.size) + (1.0 - q) * math.log(k - idx.size)
    return entropy_vec(p) <= bound + slack


def count_balanced(n: int, k: int) -> int:
    """|B(n, k)|: exact count of balanced maps [n] -> [k].

    Class-by-class DP over labelled vertices:
    W_c[j] = sum_{s ok} W_{c-1}[j - s] * C(j, s).
    """
    ok = balance_window(n, k)
    W = [1] + [0] * n
    for _ in range(k):
        W = [sum(W[j - s] * math.comb(j, s) for s in range(j + 1) if ok[s] and W[j - s]) for j in range(n + 1)]
    return W[n]
