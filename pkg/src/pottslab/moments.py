"""First and second moments of Z and Z_bal over G(n, m).

Every moment here is an exact finite sum.  A fixed assignment sees the
C(n,2) vertex pairs split into classes (monochromatic or not, under one or
two assignments), and a uniform m-subset of pairs is a multivariate
hypergeometric draw over those classes.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CapacityError, ContractViolation
from .exact import z_balanced, z_enumerate
from .model import (
    ColorAssignment,
    ModelParams,
    SimpleGraph,
    balance_window,
    forb,
    overlap_counts,
)

PAIR_GUARD = 4 * 10**6
TABLE_GUARD = 2 * 10**6


def _logsumexp(vals) -> float:
    vals = np.asarray(list(vals) if not isinstance(vals, np.ndarray) else vals, dtype=float)
    if vals.size == 0:
        return -math.inf
    top = vals.max()
    if top == -math.inf:
        return -math.inf
    return float(top + math.log(math.fsum(np.exp(vals - top))))


@lru_cache(maxsize=4096)
def _log_comb_row(N: int, upto: int) -> np.ndarray:
    """ln C(N, j) for j = 0..upto (-inf beyond N)."""
    out = np.full(upto + 1, -math.inf)
    for j in range(min(N, upto) + 1):
        out[j] = math.log(math.comb(N, j))
    out.setflags(write=False)
    return out


def annealed_free_energy(params: ModelParams) -> float:
    """ln k + (d/2) ln(1 - c_beta/k), per vertex."""
    return math.log(params.k) + 0.5 * params.d * math.log1p(-params.c_beta / params.k)


def log_annealed_scale(params: ModelParams) -> float:
    """ln[k^n (1 - c_beta/k)^m], the reference scale for E[Z]."""
    return params.n * math.log(params.k) + params.m * math.log1p(-params.c_beta / params.k)


# ---------------------------------------------------------------------------
# first moment
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8192)
def _log_first_moment_F(F: int, N: int, m: int, beta: float) -> float:
    if m > N:
        raise ContractViolation(f"m = {m} exceeds the number of pairs {N}")
    if beta == 0.0:
        return 0.0
    cf = _log_comb_row(F, m)
    cr = _log_comb_row(N - F, m)
    j = np.arange(m + 1)
    terms = cf + cr[::-1] - beta * j
    return _logsumexp(terms) - math.log(math.comb(N, m))


def exact_first_moment_sigma(sigma: ColorAssignment, params: ModelParams) -> float:
    """ln E[exp(-beta H_G(sigma))] for G uniform over m-edge graphs."""
    if sigma.n != params.n:
        raise ContractViolation("assignment size does not match params.n")
    return _log_first_moment_F(forb(sigma), params.n_pairs, params.m, float(params.beta))


@dataclass(frozen=True)
class MomentReport:
    exact_value: float
    mc_estimate: float = math.nan
    mc_std_error: float = math.nan
    n_samples: int = 0
    log_ratio: float = math.nan  # exact_value minus ln[k^n (1 - c/k)^m]
    extra: dict = field(default_factory=dict, compare=False)

    def deviation_in_se(self) -> float:
        """|mean - exact| / se on the linear scale."""
        mean = math.exp(self.mc_estimate)
        return abs(mean - math.exp(self.exact_value)) / (self.mc_std_error * mean)


def _profiles(n: int, k: int):
    """Nonincreasing k-tuples of class sizes summing to n."""

    def rec(left, parts, cap):
        if parts == 1:
            if left <= cap:
                yield (left,)
            return
        for s in range(min(left, cap), -1, -1):
            if s * parts < left:
                break
            for rest in rec(left - s, parts - 1, s):
                yield (s,) + rest

    yield from rec(n, k, n)


def exact_first_moment_total(params: ModelParams, restrict_balanced: bool = False) -> MomentReport:
    """ln E[Z] (or ln E[Z_bal]) grouped by class-size profile.

    A profile with multiplicities mult(v) is realised by
    k!/prod mult(v)! ordered size vectors, each by n!/prod s_i! assignments.
    """
    n, k = params.n, params.k
    ok = balance_window(n, k)
    terms = []
    for prof in _profiles(n, k):
        if restrict_balanced and not all(ok[s] for s in prof):
            continue
        F = sum(s * (s - 1) // 2 for s in prof)
        arrangements = math.factorial(k)
        for c in Counter(prof).values():
            arrangements //= math.factorial(c)
        log_count = math.log(arrangements) + math.log(math.factorial(n) // math.prod(math.factorial(s) for s in prof))
        terms.append(log_count + _log_first_moment_F(F, params.n_pairs, params.m, float(params.beta)))
    val = _logsumexp(terms)
    return MomentReport(val, log_ratio=val - log_annealed_scale(params))


def mc_first_moment(params: ModelParams, samples: int, rng, restrict_balanced: bool = False) -> MomentReport:
    """Average Z (exactly enumerated) over sampled G(n, m)."""
    from .ensembles import as_generator, sample_gnm

    if samples < 2:
        raise ContractViolation("need at least two samples for an error bar")
    gen = as_generator(rng)
    zfun = z_balanced if restrict_balanced else z_enumerate
    logs = np.array([zfun(sample_gnm(params, gen), params.k, params.beta).log_z for _ in range(samples)])
    top = logs.max()
    z = np.exp(logs - top)
    mean = z.mean()
    se = z.std(ddof=1) / math.sqrt(samples)
    exact = exact_first_moment_total(params, restrict_balanced)
    return MomentReport(
        exact.exact_value,
        float(top + math.log(mean)),
        float(se / mean),
        samples,
        exact.log_ratio,
    )


# ---------------------------------------------------------------------------
# pair moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairClassCounts:
    """Pairs monochromatic under both (a), sigma only (b), tau only (c)."""

    a: int
    b: int
    c: int
    total: int

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0 or self.a + self.b + self.c > self.total:
            raise ContractViolation("inconsistent pair class counts")

    @classmethod
    def from_overlap_counts(cls, counts: np.ndarray) -> "PairClassCounts":
        counts = np.asarray(counts, dtype=np.int64)
        n = int(counts.sum())
        a = int((counts * (counts - 1) // 2).sum())
        r, c = counts.sum(axis=1), counts.sum(axis=0)
        fs = int((r * (r - 1) // 2).sum())
        ft = int((c * (c - 1) // 2).sum())
        return cls(a, fs - a, ft - a, n * (n - 1) // 2)

    @classmethod
    def of(cls, sigma: ColorAssignment, tau: ColorAssignment) -> "PairClassCounts":
        return cls.from_overlap_counts(overlap_counts(sigma, tau))


@lru_cache(maxsize=1 << 16)
def _log_pair_moment_abc(a: int, b: int, c: int, N: int, m: int, beta: float) -> float:
    la, lb, lc = _log_comb_row(a, m), _log_comb_row(b, m), _log_comb_row(c, m)
    lr = _log_comb_row(N - a - b - c, m)
    j = np.arange(m + 1)
    # weight exp(-beta (2 ma + mb + mc)); convolve the three mono classes first
    ta = la - 2.0 * beta * j
    tb = lb - beta * j
    tc = lc - beta * j
    ab = _log_convolve(ta, tb, m)
    abc = _log_convolve(ab, tc, m)
    total = _logsumexp(abc + lr[::-1])
    return total - math.log(math.comb(N, m))


def _log_convolve(x: np.ndarray, y: np.ndarray, upto: int) -> np.ndarray:
    out = np.full(upto + 1, -math.inf)
    for t in range(upto + 1):
        out[t] = _logsumexp(x[: t + 1] + y[t::-1])
    return out


def exact_pair_moment(sigma: ColorAssignment, tau: ColorAssignment, params: ModelParams) -> float:
    """ln E[exp(-beta (H(sigma) + H(tau)))]."""
    if sigma.n != params.n or tau.n != params.n:
        raise ContractViolation("assignment size does not match params.n")
    pc = PairClassCounts.of(sigma, tau)
    return pair_moment_from_counts(pc, params)


def pair_moment_from_counts(pc: PairClassCounts, params: ModelParams) -> float:
    if params.m > pc.total:
        raise ContractViolation("m exceeds the number of pairs")
    return _log_pair_moment_abc(pc.a, pc.b, pc.c, pc.total, params.m, float(params.beta))


@dataclass(frozen=True)
class OverlapGroup:
    counts: tuple  # flattened k*k intersection sizes n_ij
    n_pairs: int  # number of ordered (sigma, tau) pairs with these counts
    log_pair_moment: float

    @property
    def log_value(self) -> float:
        """ln E[Z_rho,bal] = ln(#pairs) + ln(pair moment)."""
        return math.log(self.n_pairs) + self.log_pair_moment

    def rho(self, n: int, k: int) -> np.ndarray:
        return np.array(self.counts, dtype=float).reshape(k, k) * (k / n)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _contingency_tables(n: int, k: int):
    """k x k nonnegative integer tables with total n and balanced margins."""
    ok = balance_window(n, k)
    rows = [r for r in _compositions(n, k) if all(ok[s] for s in r)]
    row_options = {}
    for r in rows:
        for s in r:
            if s not in row_options:
                row_options[s] = list(_compositions(s, k))
    for r in rows:
        for table in itertools.product(*(row_options[s] for s in r)):
            colsum = [sum(col) for col in zip(*table)]
            if all(ok[s] for s in colsum):
                yield table


def second_moment_by_overlap(params: ModelParams) -> dict[tuple, OverlapGroup]:
    """Exact E[Z_rho,bal] for every overlap realised by a balanced pair."""
    n, k = params.n, params.k
    n_tables = math.comb(n + k * k - 1, k * k - 1)
    if n_tables > TABLE_GUARD:
        raise CapacityError(f"{n_tables} candidate overlap tables exceed the guard")
    fact = [math.factorial(i) for i in range(n + 1)]
    groups = {}
    for table in _contingency_tables(n, k):
        flat = tuple(x for row in table for x in row)
        ways = fact[n] // math.prod(fact[x] for x in flat)
        pc = PairClassCounts.from_overlap_counts(np.array(table))
        groups[flat] = OverlapGroup(flat, ways, pair_moment_from_counts(pc, params))
    return groups


def log_second_moment(groups: dict) -> float:
    return _logsumexp([g.log_value for g in groups.values()])


def balanced_assignments(n: int, k: int) -> np.ndarray:
    """All balanced assignments as rows of an (B, n) array."""
    if k**n > PAIR_GUARD:
        raise CapacityError("too many assignments to list")
    idx = np.arange(k**n, dtype=np.int64)
    cols = (idx[:, None] // (k ** np.arange(n, dtype=np.int64))[None, :]) % k
    sizes = np.stack([(cols == i).sum(axis=1) for i in range(k)], axis=1)
    keep = balance_window(n, k)[sizes].all(axis=1)
    return cols[keep]


def log_second_moment_direct(params: ModelParams) -> float:
    """ln E[Z_bal^2] by summing the pair moment over all balanced pairs.

    Independent of the overlap grouping: pairs are listed explicitly and
    their monochromatic-pair counts come from one-hot products.
    """
    n, k = params.n, params.k
    cols = balanced_assignments(n, k)
    B = cols.shape[0]
    if B * B > PAIR_GUARD:
        raise CapacityError(f"{B}^2 balanced pairs exceed the guard")
    onehot = np.eye(k, dtype=np.int64)[cols]  # (B, n, k)
    same = np.einsum("aik,ajk->aij", onehot, onehot)  # vertex pairs sharing a color
    iu = np.triu_indices(n, 1)
    mono = same[:, iu[0], iu[1]]  # (B, N) indicator of sigma-monochromatic pairs
    a = mono @ mono.T
    f = mono.sum(axis=1)
    N = n * (n - 1) // 2
    keys = Counter(zip(a.ravel().tolist(), np.repeat(f, B).tolist(), np.tile(f, B).tolist()))
    terms = [
        math.log(cnt) + _log_pair_moment_abc(aa, fs - aa, ft - aa, N, params.m, float(params.beta))
        for (aa, fs, ft), cnt in keys.items()
    ]
    return _logsumexp(terms)


def log_second_moment_bruteforce(params: ModelParams) -> float:
    """ln E[Z_bal^2] by averaging Z_bal(G)^2 over every m-edge graph."""
    n = params.n
    N = n * (n - 1) // 2
    if math.comb(N, params.m) > 20000:
        raise CapacityError("graph space too large for brute force")
    pairs = list(itertools.combinations(range(n), 2))
    vals = []
    for chosen in itertools.combinations(pairs, params.m):
        G = SimpleGraph.from_pairs(n, chosen)
        vals.append(2.0 * z_balanced(G, params.k, params.beta).log_z)
    return _logsumexp(vals) - math.log(len(vals))


def overlap_columns(k: int) -> list[str]:
    return [f"n_{i + 1}{j + 1}" for i in range(k) for j in range(k)] + [
        "n_pairs",
        "log_value",
        "log_value_per_n",
        "f_value",
    ]


def overlap_rows(groups: dict, params: ModelParams) -> list[dict]:
    """Per-overlap table keyed by the flattened overlap counts."""
    from .landscape import LandscapeParams, f_eval

    lp = LandscapeParams(params.k, params.d, params.beta)
    names = overlap_columns(params.k)
    rows = []
    for key in sorted(groups):
        g = groups[key]
        row = dict(zip(names, key))
        row.update(
            n_pairs=g.n_pairs,
            log_value=g.log_value,
            log_value_per_n=g.log_value / params.n,
            f_value=f_eval(g.rho(params.n, params.k), lp),
        )
        rows.append(row)
    return rows


def write_overlap_csv(groups: dict, params: ModelParams, path) -> None:
    from .io import format_float

    names = overlap_columns(params.k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, names)
        w.writeheader()
        for r in overlap_rows(groups, params):
            w.writerow({c: format_float(v) if isinstance(v, float) else v for c, v in r.items()})
