"""SEP1/SEP2 predicates and planted-model separability rates.

SEP1 bounds the number of edges inside each color class.  SEP2 asks that
no overlap entry between sigma and any competitor tau in Sigma_{G,beta}
(balanced, SEP1-passing assignments) falls into the band (0.51, 1 - kappa).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .errors import CapacityError, ContractViolation
from .landscape import BAND_LOW, LandscapeParams
from .model import ColorAssignment, ModelParams, SimpleGraph, balance_window, class_edge_counts, overlap_counts

EXHAUSTIVE_GUARD = 10**6


@dataclass(frozen=True)
class SepConfig:
    params: ModelParams
    kappa_cap: float = 0.25

    @property
    def kappa_eff(self) -> float:
        p = self.params
        return LandscapeParams(p.k, p.d, p.beta, self.kappa_cap).kappa_eff

    @property
    def sep1_threshold(self) -> float:
        p = self.params
        return 2.0 * p.n * math.exp(-p.beta) * math.log(p.k) / p.k

    @property
    def band(self) -> tuple[float, float]:
        return BAND_LOW, 1.0 - self.kappa_eff


def _config(params, kappa_cap=0.25) -> SepConfig:
    return params if isinstance(params, SepConfig) else SepConfig(params, kappa_cap)


@dataclass(frozen=True)
class Sep1Result:
    passed: bool
    counts: np.ndarray
    threshold: float

    def __bool__(self):
        return self.passed


def sep1_check(G: SimpleGraph, sigma: ColorAssignment, params) -> Sep1Result:
    cfg = _config(params)
    counts = class_edge_counts(G, sigma)
    thr = cfg.sep1_threshold
    return Sep1Result(bool(np.all(counts <= thr)), counts, thr)


def sigma_set_filter(G: SimpleGraph, params, candidates) -> list[ColorAssignment]:
    """Candidates that are balanced and pass SEP1."""
    return [t for t in candidates if t.is_balanced and sep1_check(G, t, params).passed]


@dataclass(frozen=True)
class Sep2Result:
    passed: bool
    violations: list = field(default_factory=list)  # (tau, i, j, rho_ij)
    exhaustive: bool = False
    n_witnesses: int = 0

    def __bool__(self):
        return self.passed


def _all_sigma_set(G: SimpleGraph, cfg: SepConfig) -> np.ndarray:
    """Color arrays of every tau in Sigma_{G,beta}, by enumeration."""
    n, k = G.n, cfg.params.k
    if k**n > EXHAUSTIVE_GUARD:
        raise CapacityError(f"k^n = {k}^{n} exceeds the exhaustive SEP2 guard")
    idx = np.arange(k**n, dtype=np.int64)
    cols = (idx[:, None] // (k ** np.arange(n, dtype=np.int64))[None, :]) % k
    sizes = np.stack([(cols == i).sum(axis=1) for i in range(k)], axis=1)
    keep = balance_window(n, k)[sizes].all(axis=1)
    cols = cols[keep]
    if G.num_edges:
        u, v = G.edges[:, 0], G.edges[:, 1]
        mono = cols[:, u] == cols[:, v]
        per_class = np.stack([(mono & (cols[:, u] == i)).sum(axis=1) for i in range(k)], axis=1)
        cols = cols[(per_class <= cfg.sep1_threshold).all(axis=1)]
    return cols


def sep2_check(G: SimpleGraph, sigma: ColorAssignment, params, witnesses=None, kappa_cap: float = 0.25) -> Sep2Result:
    """SEP2 for sigma against witnesses (or all of Sigma_{G,beta} if None).

    Witnesses outside Sigma_{G,beta} are ignored, as the condition only
    quantifies over that set.  A check against a supplied witness list is
    partial evidence, flagged by ``exhaustive=False``.
    """
    cfg = _config(params, kappa_cap)
    k = cfg.params.k
    if not (sigma.is_balanced and sep1_check(G, sigma, cfg).passed):
        raise ContractViolation("sigma must be balanced and satisfy SEP1")
    lo, hi = cfg.band
    n = sigma.n
    if witnesses is None:
        cols = _all_sigma_set(G, cfg)
        onehot_s = np.eye(k, dtype=np.int64)[sigma.colors]  # (n, k)
        onehot_t = np.eye(k, dtype=np.int64)[cols]  # (W, n, k)
        counts = np.einsum("ni,wnj->wij", onehot_s, onehot_t)
        rho = counts * (k / n)
        bad = (rho > lo) & (rho < hi)
        viol = []
        for w, i, j in zip(*np.nonzero(bad)):
            viol.append((ColorAssignment(cols[w], k), int(i), int(j), float(rho[w, i, j])))
        return Sep2Result(not viol, viol, True, int(cols.shape[0]))
    ws = sigma_set_filter(G, cfg, witnesses)
    viol = []
    for tau in ws:
        rho = overlap_counts(sigma, tau) * (k / n)
        for i, j in zip(*np.nonzero((rho > lo) & (rho < hi))):
            viol.append((tau, int(i), int(j), float(rho[i, j])))
    return Sep2Result(not viol, viol, False, len(ws))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class SepRateResult:
    samples: int
    sep1_passes: int
    sep1_rate: float
    sep1_interval: tuple
    sep2_checked: int = 0
    sep2_passes: int = 0
    sep2_rate: float = math.nan
    sep2_interval: tuple = (math.nan, math.nan)
    sep2_exhaustive: bool = False
    in_regime: bool = True
    label: str = "finite-n surrogate"


def in_planted_regime(params: ModelParams) -> bool:
    k = params.k
    lo = 2 * (k - 1) * math.log(k - 1)
    hi = (2 * k - 1) * math.log(k) - 2
    return lo <= params.d <= hi and params.beta >= math.log(k)


def _mcmc_witnesses(G, sigma, params, count, sweeps, gen):
    from .mcmc import GlauberChain

    chain = GlauberChain(G, params.k, params.beta, sigma.colors.copy())
    out = []
    for _ in range(count):
        chain.run(sweeps * G.n, gen)
        out.append(chain.state.assignment)
    return out


def empirical_separability_rate(
    params: ModelParams,
    samples: int,
    rng,
    kappa_cap: float = 0.25,
    sep2: str = "none",
    witnesses: int = 20,
    witness_sweeps: int = 5,
    max_tries: int = 1000,
) -> SepRateResult:
    """Fraction of balanced planted samples passing SEP1 (and optionally SEP2).

    ``sep2`` is ``"none"``, ``"exhaustive"`` (tiny n only) or ``"mcmc"``,
    where witnesses are Glauber states started from the planted assignment.
    """
    from .ensembles import as_generator, condition_on_balanced

    if samples < 1:
        raise ContractViolation("samples must be positive")
    regime = in_planted_regime(params)
    if not regime:
        warnings.warn("parameters outside the planted-model regime; rates are still reported", stacklevel=2)
    gen = as_generator(rng)
    cfg = SepConfig(params, kappa_cap)
    s1 = s2 = s2n = 0
    for _ in range(samples):
        ps = condition_on_balanced(params, gen, max_tries)
        if not sep1_check(ps.graph, ps.sigma_hat, cfg).passed:
            continue
        s1 += 1
        if sep2 == "none":
            continue
        if sep2 == "exhaustive":
            res = sep2_check(ps.graph, ps.sigma_hat, cfg)
        elif sep2 == "mcmc":
            ws = _mcmc_witnesses(ps.graph, ps.sigma_hat, params, witnesses, witness_sweeps, gen)
            res = sep2_check(ps.graph, ps.sigma_hat, cfg, ws)
        else:
            raise ContractViolation(f"unknown sep2 mode {sep2!r}")
        s2n += 1
        s2 += res.passed
    out = SepRateResult(samples, s1, s1 / samples, wilson_interval(s1, samples), in_regime=regime)
    if s2n:
        out = SepRateResult(
            samples, s1, s1 / samples, wilson_interval(s1, samples),
            s2n, s2, s2 / s2n, wilson_interval(s2, s2n), sep2 == "exhaustive", regime,
        )
    return out
