import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pottslab.ensembles import condition_on_balanced, gnm
from pottslab.errors import ContractViolation
from pottslab.model import ColorAssignment, ModelParams, SimpleGraph
from pottslab.separability import (
    SepConfig,
    empirical_separability_rate,
    in_planted_regime,
    sep1_check,
    sep2_check,
    sigma_set_filter,
    wilson_interval,
)


def blocks(sizes, k):
    return ColorAssignment(np.repeat(np.arange(len(sizes)), sizes), k)


def test_threshold_formula():
    p = ModelParams(10, 2000, 30.0, 2 * math.log(10))
    assert math.isclose(SepConfig(p).sep1_threshold, 2 * 2000 * math.exp(-p.beta) * math.log(10) / 10, rel_tol=1e-15)
    assert SepConfig(p).kappa_eff == 0.25


def test_sep1_proper_coloring_passes():
    G = SimpleGraph.from_pairs(6, [(0, 1), (1, 2), (2, 0), (3, 4)])
    s = ColorAssignment(np.array([0, 1, 2, 0, 1, 2]), 3)
    r = sep1_check(G, s, ModelParams(3, 6, 2.0, 5.0))
    assert r.passed and r.counts.sum() == 0


def test_sep1_planted_clique_fails():
    n, k = 200, 4
    p = ModelParams(k, n, 3.0, 4.0)
    thr = SepConfig(p).sep1_threshold
    r = math.ceil(math.sqrt(3 * thr)) + 2
    assert math.comb(r, 2) > thr
    s = ColorAssignment(np.arange(n) % k, k)
    members = np.flatnonzero(s.colors == 0)[:r]
    pairs = [(int(a), int(b)) for i, a in enumerate(members) for b in members[i + 1 :]]
    res = sep1_check(SimpleGraph.from_pairs(n, pairs), s, p)
    assert not res.passed
    assert res.counts[0] == math.comb(r, 2)
    with pytest.raises(ContractViolation):
        sep1_check(SimpleGraph.empty(5), s, p)


@given(st.integers(0, 2**32 - 1), st.data())
def test_sep1_invariant_under_color_permutation(seed, data):
    gen = np.random.default_rng(seed)
    n, k = 40, 4
    p = ModelParams(k, n, 6.0, 0.5)
    G = gnm(n, 120, gen)
    s = ColorAssignment(gen.integers(0, k, n), k)
    perm = data.draw(st.permutations(range(k)))
    assert sep1_check(G, s, p).passed == sep1_check(G, s.permuted(perm), p).passed


@given(st.integers(0, 2**32 - 1))
def test_sep1_failure_persists_under_edge_addition(seed):
    gen = np.random.default_rng(seed)
    n, k = 30, 3
    p = ModelParams(k, n, 4.0, 1.0)
    G = gnm(n, 150, gen)
    s = ColorAssignment(gen.integers(0, k, n), k)
    if sep1_check(G, s, p).passed:
        return
    H = gnm(n, 200, gen)
    union = SimpleGraph.from_pairs(n, list(G.edge_set() | H.edge_set()))
    assert not sep1_check(union, s, p).passed


def test_sigma_set_filter():
    G = SimpleGraph.empty(6)
    p = ModelParams(3, 6, 1.0, 1.0)
    assert sigma_set_filter(G, p, []) == []
    unbalanced = [ColorAssignment(np.zeros(6, dtype=int), 3)]
    assert sigma_set_filter(G, p, unbalanced) == []
    gen = np.random.default_rng(0)
    cands = [ColorAssignment(gen.integers(0, 3, 6), 3) for _ in range(50)]
    once = sigma_set_filter(G, p, cands)
    assert sigma_set_filter(G, p, once) == once
    assert all(c.is_balanced for c in once)


def test_sep2_self_witness_passes():
    n, k = 15, 3
    s = blocks([5, 5, 5], k)
    p = ModelParams(k, n, 1.0, 1.0)
    G = SimpleGraph.empty(n)
    assert sep2_check(G, s, p, witnesses=[s]).passed


def test_sep2_engineered_overlap_fails():
    n, k = 15, 3
    s = blocks([5, 5, 5], k)
    t = s.colors.copy()
    t[[3, 4]] = 1
    t[[5, 6]] = 0
    tau = ColorAssignment(t, k)
    assert tau.is_balanced
    p = ModelParams(k, n, 1.0, 1.0)
    res = sep2_check(SimpleGraph.empty(n), s, p, witnesses=[s, tau])
    assert not res.passed
    bad = {(i, j) for _, i, j, _ in res.violations}
    assert bad == {(0, 0), (1, 1)}
    assert all(math.isclose(v, 0.6) for *_, v in res.violations)
    assert res.n_witnesses == 2 and not res.exhaustive


def test_sep2_witness_monotonicity():
    n, k = 15, 3
    s = blocks([5, 5, 5], k)
    gen = np.random.default_rng(2)
    W2 = [ColorAssignment(gen.permutation(s.colors), k) for _ in range(30)]
    W1 = W2[:10]
    p = ModelParams(k, n, 1.0, 1.0)
    G = SimpleGraph.empty(n)
    if sep2_check(G, s, p, witnesses=W2).passed:
        assert sep2_check(G, s, p, witnesses=W1).passed
    # failing on the subset implies failing on the superset
    if not sep2_check(G, s, p, witnesses=W1).passed:
        assert not sep2_check(G, s, p, witnesses=W2).passed


def test_sep2_precondition():
    s = ColorAssignment(np.zeros(9, dtype=int), 3)
    with pytest.raises(ContractViolation):
        sep2_check(SimpleGraph.empty(9), s, ModelParams(3, 9, 1.0, 1.0), witnesses=[])


def test_sep2_exhaustive_tiny():
    k = 3
    p = ModelParams(k, 9, 2 * (k - 1) * math.log(k - 1), 2 * math.log(k))
    passes = checked = 0
    for seed in range(5):
        ps = condition_on_balanced(p, seed)
        if not sep1_check(ps.graph, ps.sigma_hat, p).passed:
            continue
        res = sep2_check(ps.graph, ps.sigma_hat, p)
        assert res.exhaustive and res.n_witnesses >= 1
        checked += 1
        passes += res.passed
        # every violation really lies in the band
        for _, i, j, v in res.violations:
            assert 0.51 < v < 0.75
    assert checked >= 1
    print(f"exhaustive SEP2 at n=9, k=3: {passes}/{checked} planted instances separable")


def test_wilson_interval():
    lo, hi = wilson_interval(95, 100)
    assert lo < 0.95 < hi
    assert math.isclose(lo, 0.8882, abs_tol=1e-3)


def test_rate_large_beta():
    k = 4
    p = ModelParams(k, 300, 2 * (k - 1) * math.log(k - 1), 10 * math.log(k))
    r = empirical_separability_rate(p, 100, 3)
    assert r.sep1_rate == 1.0
    assert r.label == "finite-n surrogate"
    assert r.in_regime


def test_rate_monotone_in_beta():
    k, n = 4, 300
    d = 2 * (k - 1) * math.log(k - 1)
    rates = []
    for b in (math.log(k), 1.5 * math.log(k), 2.5 * math.log(k)):
        rates.append(empirical_separability_rate(ModelParams(k, n, d, b), 60, 11))
    for a, b in zip(rates, rates[1:]):
        assert b.sep1_interval[1] >= a.sep1_interval[0]


def test_rate_errors_and_warnings():
    p = ModelParams(3, 60, 1.0, 0.1)
    assert not in_planted_regime(p)
    with pytest.raises(ContractViolation):
        empirical_separability_rate(p, 0, 1)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        empirical_separability_rate(p, 3, 1)
    assert any("regime" in str(x.message) for x in w)


def test_rate_with_mcmc_witnesses():
    k = 3
    p = ModelParams(k, 60, 2 * (k - 1) * math.log(k - 1), 2 * math.log(k))
    r = empirical_separability_rate(p, 5, 4, sep2="mcmc", witnesses=3, witness_sweeps=2)
    assert r.sep2_checked == r.sep1_passes
    assert not r.sep2_exhaustive
