"""Seeded random graph ensembles: G(n, m) and the planted model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ParameterError, SamplingFailure
from .model import ColorAssignment, ModelParams, SimpleGraph, count_balanced


@dataclass(frozen=True)
class SeededStream:
    """A reproducible random stream keyed by ``(master_seed, stream_id)``.

    Child streams are addressed by a path of integers and hashed through
    :class:`numpy.random.SeedSequence`, so replica ``i`` gets the same draws
    no matter in which order replicas are run.  A single stream object must
    not be shared between concurrent tasks.
    """

    master_seed: int
    stream_id: int = 0
    path: tuple = ()
    _gen: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ParameterError("master_seed must be an unsigned 64-bit integer")

    @property
    def generator(self) -> np.random.Generator:
        if not self._gen:
            ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),) + tuple(self.path))
            self._gen.append(np.random.Generator(np.random.PCG64(ss)))
        return self._gen[0]

    def child(self, i: int) -> "SeededStream":
        return SeededStream(self.master_seed, self.stream_id, tuple(self.path) + (int(i),))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, SeededStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def decode_pairs(p: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map lexicographic pair indices to (u, v) with u < v."""
    p = np.asarray(p, dtype=np.int64)
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * p, 0.0))) / 2).astype(np.int64)
    u = np.clip(u, 0, n - 2)

    def offset(x):
        return x * (2 * n - x - 1) // 2

    # float sqrt can be off by one near row boundaries
    for _ in range(2):
        u = np.where(offset(u + 1) <= p, u + 1, u)
        u = np.where(offset(u) > p, u - 1, u)
    v = p - offset(u) + u + 1
    return u, v


def sample_without_replacement(N: int, m: int, gen: np.random.Generator) -> np.ndarray:
    """Uniform m-subset of range(N) by a partial Fisher-Yates shuffle.

    The virtual array ``0..N-1`` is stored sparsely in a dict, so the cost is
    O(m) regardless of N.
    """
    if m > N:
        raise ParameterError(f"cannot draw {m} distinct items from {N}")
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    js = gen.integers(np.arange(m), N)
    swapped: dict[int, int] = {}
    out = np.empty(m, dtype=np.int64)
    for i in range(m):
        j = int(js[i])
        aj = swapped.get(j, j)
        swapped[j] = swapped.get(i, i)
        out[i] = aj
    return out


def gnm(n: int, m: int, rng) -> SimpleGraph:
    N = n * (n - 1) // 2
    if m > N:
        raise ParameterError(f"m={m} exceeds the {N} vertex pairs of K_{n}")
    idx = np.sort(sample_without_replacement(N, m, as_generator(rng)))
    u, v = decode_pairs(idx, n)
    return SimpleGraph(n, np.stack([u, v], axis=1))


def sample_gnm(params: ModelParams, rng) -> SimpleGraph:
    """Uniform simple graph on [n] with exactly m = ceil(dn/2) edges."""
    return gnm(params.n, params.m, rng)


@dataclass(frozen=True)
class PlantedSample:
    graph: SimpleGraph
    sigma_hat: ColorAssignment
    p1: float
    p2: float
    attempts: int = 1


def planted_probabilities(params: ModelParams) -> tuple[float, float]:
    """(p1, p2): edge probabilities for monochromatic / bichromatic pairs."""
    k, n, d = params.k, params.n, params.d
    denom = n * (k - params.c_beta)
    return d * k * math.exp(-params.beta) / denom, d * k / denom


def planted_graph(params: ModelParams, sigma: ColorAssignment, rng) -> SimpleGraph:
    """Graph of the planted model given the planted assignment.

    Every pair is first kept with probability p2 (binomial count, then a
    uniform subset of that size); monochromatic survivors are then thinned
    with probability p1 / p2 = exp(-beta).  Pairs end up independent with
    the right marginals.
    """
    gen = as_generator(rng)
    p1, p2 = planted_probabilities(params)
    if p2 >= 1:
        raise ParameterError(f"planted edge probability p2={p2} must be < 1; increase n")
    n = params.n
    N = n * (n - 1) // 2
    K = int(gen.binomial(N, p2))
    idx = np.sort(sample_without_replacement(N, K, gen))
    u, v = decode_pairs(idx, n)
    c = sigma.colors
    mono = c[u] == c[v]
    keep = ~mono | (gen.random(idx.size) < p1 / p2)
    return SimpleGraph(n, np.stack([u[keep], v[keep]], axis=1))


def sample_planted(params: ModelParams, rng) -> PlantedSample:
    gen = as_generator(rng)
    p1, p2 = planted_probabilities(params)
    sigma = ColorAssignment(gen.integers(0, params.k, params.n), params.k)
    return PlantedSample(planted_graph(params, sigma, gen), sigma, p1, p2)


def condition_on_balanced(params: ModelParams, rng, max_tries: int = 1000) -> PlantedSample:
    """Planted sample conditioned on the planted assignment being balanced.

    Only the assignment is redrawn on rejection; the graph is drawn once,
    after acceptance, which gives the same conditional law.
    """
    if max_tries < 1:
        raise ParameterError("max_tries must be >= 1")
    gen = as_generator(rng)
    p1, p2 = planted_probabilities(params)
    for attempt in range(1, max_tries + 1):
        sigma = ColorAssignment(gen.integers(0, params.k, params.n), params.k)
        if sigma.is_balanced:
            return PlantedSample(planted_graph(params, sigma, gen), sigma, p1, p2, attempt)
    raise SamplingFailure(f"no balanced assignment in {max_tries} draws (n={params.n}, k={params.k})")


def balanced_probability(n: int, k: int) -> float:
    """P(uniform sigma in [k]^n is balanced), from the exact multinomial count."""
    return float(Fraction(count_balanced(n, k), k**n))
