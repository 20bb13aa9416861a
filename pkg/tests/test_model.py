import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pottslab.errors import ContractViolation, ParameterError
from pottslab.io import parse_graph, read_assignment, read_graph, read_matrix, write_assignment, write_graph, write_matrix
from pottslab.model import (
    DOUBLY_STOCHASTIC,
    ColorAssignment,
    ModelParams,
    SimpleGraph,
    StochasticMatrix,
    balance_window,
    binary_entropy,
    class_edge_counts,
    count_balanced,
    edge_count,
    entropy_bound_check,
    entropy_matrix,
    entropy_vec,
    forb,
    hamiltonian,
    overlap_counts,
    overlap_matrix,
)


def one(colors, k):
    return ColorAssignment.from_one_based(colors, k)


@st.composite
def graph_and_coloring(draw, max_n=9, max_k=4):
    n = draw(st.integers(2, max_n))
    k = draw(st.integers(2, max_k))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    colors = draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))
    return SimpleGraph.from_pairs(n, chosen), ColorAssignment(np.array(colors), k)


def test_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(1, 5, 2.0, 1.0)
    with pytest.raises(ParameterError):
        ModelParams(3, 5, 0.0, 1.0)
    with pytest.raises(ParameterError):
        ModelParams(3, 5, 2.0, -0.1)
    p = ModelParams(3, 7, 3.0, math.log(3))
    assert p.m == 11
    assert math.isclose(p.c_beta, 2 / 3, rel_tol=1e-15)


def test_edge_count_float_noise():
    # 0.1 * 30 / 2 is 1.5000000000000002 in floating point
    assert edge_count(30, 0.1) == 2
    assert edge_count(10, 3.0) == 15
    assert edge_count(7, 3.0) == 11


def test_graph_rejects_loops_and_duplicates():
    with pytest.raises(ContractViolation):
        SimpleGraph.from_pairs(3, [(0, 0)])
    with pytest.raises(ContractViolation):
        SimpleGraph.from_pairs(3, [(0, 1), (1, 0)])
    with pytest.raises(ContractViolation):
        SimpleGraph.from_pairs(3, [(0, 3)])
    assert SimpleGraph.from_pairs(3, [(0, 1), (1, 0)], dedupe=True).num_edges == 1


def test_hamiltonian_examples():
    K3 = SimpleGraph.complete(3)
    assert hamiltonian(K3, one([1, 1, 1], 3)) == 3
    assert hamiltonian(K3, one([1, 2, 3], 3)) == 0
    path = SimpleGraph.from_pairs(3, [(0, 1), (1, 2)])
    assert hamiltonian(path, one([1, 1, 2], 2)) == 1
    with pytest.raises(ContractViolation):
        hamiltonian(K3, one([1, 2], 2))


def test_forb_examples():
    assert forb(one([1, 1, 2, 2], 2)) == 2
    assert forb(one([1, 1, 1], 3)) == 3
    assert forb(one([1, 2, 3], 3)) == 0


@given(graph_and_coloring())
def test_hamiltonian_is_sum_of_class_counts(gc):
    G, s = gc
    brute = sum(1 for u, v in G.edges if s.colors[u] == s.colors[v])
    assert hamiltonian(G, s) == brute == class_edge_counts(G, s).sum()
    assert hamiltonian(G, s) <= forb(s)


@given(graph_and_coloring(), st.data())
def test_hamiltonian_color_permutation_invariant(gc, data):
    G, s = gc
    perm = data.draw(st.permutations(range(s.k)))
    assert hamiltonian(G, s.permuted(perm)) == hamiltonian(G, s)


@given(graph_and_coloring())
def test_hamiltonian_on_complete_graph_is_forb(gc):
    _, s = gc
    assert hamiltonian(SimpleGraph.complete(s.n), s) == forb(s)


@given(st.integers(2, 40), st.integers(2, 6))
def test_forb_convexity_bound(n, k):
    # any assignment has at least C(n,2)/k - n monochromatic pairs
    rng = np.random.default_rng(n * 31 + k)
    s = ColorAssignment(rng.integers(0, k, n), k)
    assert forb(s) >= math.comb(n, 2) / k - n


def test_balance_window_integer_rule():
    # (k s - n)^2 <= k^2 n, ties balanced
    n, k = 9, 3
    ok = balance_window(n, k)
    for s in range(n + 1):
        assert ok[s] == ((k * s - n) ** 2 <= k * k * n)
    # n=4, k=2: |s - 2| <= 2 always
    assert balance_window(4, 2).all()


@pytest.mark.parametrize("n,k", [(4, 2), (6, 3), (7, 3), (8, 4), (9, 2)])
def test_count_balanced_against_brute_force(n, k):
    ok = balance_window(n, k)
    brute = 0
    for c in itertools.product(range(k), repeat=n):
        sizes = np.bincount(c, minlength=k)
        brute += bool(ok[sizes].all())
    assert count_balanced(n, k) == brute


def test_count_balanced_n6_k3():
    # frozen from brute-force enumeration: |B|^2 = 476100
    assert count_balanced(6, 3) == 690


def test_overlap_examples():
    a = np.asarray(overlap_matrix(one([1, 1, 2, 2], 2), one([2, 2, 1, 1], 2)))
    assert np.array_equal(a, [[0, 1], [1, 0]])
    b = np.asarray(overlap_matrix(one([1, 1, 2, 2], 2), one([1, 2, 1, 2], 2)))
    assert np.allclose(b, 0.5)


@given(st.integers(1, 12), st.integers(2, 5), st.data())
def test_overlap_counts_margins(n, k, data):
    s = ColorAssignment(np.array(data.draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))), k)
    t = ColorAssignment(np.array(data.draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))), k)
    N = overlap_counts(s, t)
    assert N.sum() == n
    assert np.array_equal(N.sum(axis=1), s.class_sizes)
    assert np.array_equal(N.sum(axis=0), t.class_sizes)
    assert np.array_equal(overlap_counts(t, s), N.T)


def test_entropy_examples():
    assert math.isclose(entropy_vec(np.full(5, 0.2)), math.log(5), rel_tol=1e-14)
    assert entropy_vec([1.0, 0.0]) == 0.0
    assert math.isclose(binary_entropy(0.5), math.log(2), rel_tol=1e-15)
    assert binary_entropy(0.0) == binary_entropy(1.0) == 0.0
    assert math.isclose(entropy_matrix(np.eye(4) / 4), math.log(4), rel_tol=1e-14)
    with pytest.raises(ContractViolation):
        entropy_vec([0.5, 0.6])
    with pytest.raises(ContractViolation):
        binary_entropy(1.5)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_entropy_row_stochastic_identity(k, seed):
    # H(rho/k) = ln k + (1/k) sum_i H(rho_i) for row-stochastic rho
    rho = np.random.default_rng(seed).dirichlet(np.ones(k), size=k)
    lhs = entropy_matrix(rho / k)
    rhs = math.log(k) + sum(entropy_vec(r / r.sum()) for r in rho) / k
    assert math.isclose(lhs, rhs, rel_tol=1e-11, abs_tol=1e-12)


@given(st.integers(3, 10), st.integers(0, 2**32 - 1), st.data())
def test_entropy_bound(k, seed, data):
    p = np.random.default_rng(seed).dirichlet(np.ones(k))
    size = data.draw(st.integers(1, k - 1))
    subset = data.draw(st.lists(st.integers(0, k - 1), min_size=size, max_size=size, unique=True))
    assert entropy_bound_check(p, subset)


def test_entropy_bound_equality_case():
    # uniform on I and on the complement with the right masses makes it tight
    k, q = 6, 0.3
    p = np.array([q / 2, q / 2] + [(1 - q) / 4] * 4)
    bound = binary_entropy(q) + q * math.log(2) + (1 - q) * math.log(k - 2)
    assert math.isclose(entropy_vec(p), bound, rel_tol=1e-14)
    assert entropy_bound_check(p, [0, 1], slack=1e-12)


def test_stochastic_matrix_checks():
    with pytest.raises(ContractViolation):
        StochasticMatrix(np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(ContractViolation):
        StochasticMatrix(np.array([[1.0, 0.0], [1.0, 0.0]]), DOUBLY_STOCHASTIC)
    with pytest.raises(ContractViolation):
        StochasticMatrix(np.array([[1.5, -0.5], [0.5, 0.5]]))
    m = StochasticMatrix(np.eye(3), DOUBLY_STOCHASTIC)
    assert m.frobenius_sq() == 3.0


def test_assignment_index_roundtrip():
    for idx in range(27):
        assert ColorAssignment.from_index(idx, 3, 3).index() == idx


def test_graph_file_roundtrip(tmp_path):
    G = SimpleGraph.from_pairs(5, [(0, 1), (1, 2), (3, 4)])
    write_graph(G, tmp_path / "g.txt")
    assert read_graph(tmp_path / "g.txt") == G
    assert parse_graph("# comment\nn 3\n1 2\n\n2 3  # trailing\n").num_edges == 2
    with pytest.raises(ContractViolation):
        parse_graph("1 2\n")
    with pytest.raises(ContractViolation):
        parse_graph("n 3\n1 2 3\n")


def test_assignment_and_matrix_roundtrip(tmp_path):
    s = one([1, 3, 2, 2], 3)
    write_assignment(s, tmp_path / "a.txt")
    assert read_assignment(tmp_path / "a.txt", 3) == s
    rho = np.random.default_rng(0).dirichlet(np.ones(4), size=4)
    write_matrix(rho, tmp_path / "m.csv")
    assert np.array_equal(read_matrix(tmp_path / "m.csv"), rho)
