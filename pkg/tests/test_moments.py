import csv
import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pottslab.errors import ContractViolation
from pottslab.exact import z_balanced, z_enumerate
from pottslab.model import ColorAssignment, ModelParams, SimpleGraph, count_balanced, hamiltonian
from pottslab.moments import (
    PairClassCounts,
    annealed_free_energy,
    exact_first_moment_sigma,
    exact_first_moment_total,
    exact_pair_moment,
    log_second_moment,
    log_second_moment_bruteforce,
    log_second_moment_direct,
    mc_first_moment,
    overlap_columns,
    overlap_rows,
    second_moment_by_overlap,
    write_overlap_csv,
)


def all_graphs(n, m):
    pairs = list(itertools.combinations(range(n), 2))
    for chosen in itertools.combinations(pairs, m):
        yield SimpleGraph.from_pairs(n, chosen)


def one(colors, k):
    return ColorAssignment.from_one_based(colors, k)


def params_nm(k, n, m, beta):
    # d chosen so that ceil(d n / 2) == m
    return ModelParams(k, n, 2 * m / n, beta)


def test_first_moment_per_sigma_closed_form():
    b = 0.9
    p = params_nm(2, 3, 2, b)
    got = math.exp(exact_first_moment_sigma(one([1, 1, 2], 2), p))
    assert math.isclose(got, (2 / 3) * math.exp(-b) + 1 / 3, rel_tol=1e-13)


def test_first_moment_total_closed_form():
    b = 0.9
    p = params_nm(2, 3, 2, b)
    got = math.exp(exact_first_moment_total(p).exact_value)
    expect = 2 * math.exp(-2 * b) + 4 * math.exp(-b) + 2
    assert math.isclose(got, expect, rel_tol=1e-13)


def test_first_moment_beta_zero():
    p = ModelParams(3, 7, 2.0, 0.0)
    assert exact_first_moment_sigma(one([1, 1, 1, 2, 2, 3, 3], 3), p) == 0.0
    assert math.isclose(exact_first_moment_total(p).exact_value, 7 * math.log(3), rel_tol=1e-14)


def test_annealed_value():
    p = ModelParams(3, 10, 2.0, math.log(3))
    assert math.isclose(annealed_free_energy(p), math.log(7 / 3), rel_tol=1e-14)


@pytest.mark.parametrize("n,m,k,beta", [(4, 3, 2, 0.7), (5, 4, 3, 1.1), (5, 6, 2, math.log(2))])
def test_first_moment_against_graph_average(n, m, k, beta):
    p = params_nm(k, n, m, beta)
    graphs = list(all_graphs(n, m))
    z = [math.exp(z_enumerate(G, k, beta).log_z) for G in graphs]
    assert math.isclose(exact_first_moment_total(p).exact_value, math.log(np.mean(z)), rel_tol=1e-12)
    zb = [math.exp(z_balanced(G, k, beta).log_z) for G in graphs]
    assert math.isclose(exact_first_moment_total(p, True).exact_value, math.log(np.mean(zb)), rel_tol=1e-12)


@given(st.integers(0, 3**5 - 1), st.floats(0.0, 3.0))
def test_first_moment_sigma_against_graph_average(idx, beta):
    n, m, k = 5, 4, 3
    s = ColorAssignment.from_index(idx, n, k)
    p = params_nm(k, n, m, beta)
    w = [math.exp(-beta * hamiltonian(G, s)) for G in all_graphs(n, m)]
    assert math.isclose(math.exp(exact_first_moment_sigma(s, p)), np.mean(w), rel_tol=1e-12)


@given(st.integers(0, 3**5 - 1), st.integers(0, 3**5 - 1), st.floats(0.0, 3.0))
def test_pair_moment_against_graph_average(i, j, beta):
    n, m, k = 5, 4, 3
    s, t = ColorAssignment.from_index(i, n, k), ColorAssignment.from_index(j, n, k)
    p = params_nm(k, n, m, beta)
    w = [math.exp(-beta * (hamiltonian(G, s) + hamiltonian(G, t))) for G in all_graphs(n, m)]
    assert math.isclose(math.exp(exact_pair_moment(s, t, p)), np.mean(w), rel_tol=1e-12)


@given(st.integers(0, 4**6 - 1), st.floats(0.0, 3.0))
def test_pair_moment_diagonal_is_first_moment_at_double_beta(idx, beta):
    p = ModelParams(4, 6, 2.0, beta)
    s = ColorAssignment.from_index(idx, 6, 4)
    a = exact_pair_moment(s, s, p)
    b = exact_first_moment_sigma(s, p.with_(beta=2 * beta))
    assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-13)


def test_pair_class_counts_validation():
    with pytest.raises(ContractViolation):
        PairClassCounts(2, 2, 2, 5)
    pc = PairClassCounts.of(one([1, 1, 2, 2], 2), one([1, 1, 1, 2], 2))
    assert (pc.a, pc.b, pc.c, pc.total) == (1, 1, 2, 6)


def test_second_moment_three_routes():
    p = ModelParams(3, 6, 2.0, 1.0)
    groups = second_moment_by_overlap(p)
    assert sum(g.n_pairs for g in groups.values()) == count_balanced(6, 3) ** 2
    a = log_second_moment(groups)
    b = log_second_moment_direct(p)
    c = log_second_moment_bruteforce(p)
    assert abs(math.expm1(a - b)) < 1e-10
    assert abs(math.expm1(a - c)) < 1e-10
    # frozen: agreed by all three routes
    assert math.isclose(a, 10.273548003710621, rel_tol=1e-12)


def test_second_moment_at_least_first_squared():
    p = ModelParams(2, 8, 2.0, 0.8)
    first = exact_first_moment_total(p, True).exact_value
    assert log_second_moment(second_moment_by_overlap(p)) >= 2 * first - 1e-12


def test_mc_first_moment_within_error():
    p = ModelParams(3, 7, 3.0, math.log(3))
    r = mc_first_moment(p, 400, 5)
    assert r.n_samples == 400
    assert r.deviation_in_se() < 4
    with pytest.raises(ContractViolation):
        mc_first_moment(p, 1, 5)


def test_overlap_csv(tmp_path):
    p = ModelParams(2, 4, 2.0, 1.0)
    groups = second_moment_by_overlap(p)
    rows = overlap_rows(groups, p)
    assert len(rows) == len(groups)
    write_overlap_csv(groups, p, tmp_path / "o.csv")
    with open(tmp_path / "o.csv", newline="") as fh:
        back = list(csv.DictReader(fh))
    assert list(back[0]) == overlap_columns(2)
    assert [float(r["log_value"]) for r in back] == [r["log_value"] for r in rows]
