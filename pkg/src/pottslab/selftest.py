"""Closed-form examples that any correct build must reproduce."""

from __future__ import annotations

import math

import numpy as np

from .ensembles import SeededStream, sample_gnm
from .exact import gibbs_exact, z_enumerate, z_fk
from .landscape import (
    LandscapeParams,
    f_eval,
    is_separable_matrix,
    make_rho_bar,
    make_rho_s,
    make_rho_stable,
    stability_index,
)
from .model import (
    ColorAssignment,
    ModelParams,
    SimpleGraph,
    binary_entropy,
    entropy_matrix,
    entropy_vec,
    forb,
    hamiltonian,
    overlap_matrix,
)
from .moments import annealed_free_energy, exact_first_moment_sigma, exact_first_moment_total


def _one(colors, k):
    return ColorAssignment.from_one_based(colors, k)


def _checks():
    K3 = SimpleGraph.complete(3)
    path = SimpleGraph.from_pairs(3, [(0, 1), (1, 2)])
    edge = SimpleGraph.from_pairs(2, [(0, 1)])
    b = 0.7
    yield "hamiltonian K3 mono", hamiltonian(K3, _one([1, 1, 1], 3)) == 3
    yield "hamiltonian K3 proper", hamiltonian(K3, _one([1, 2, 3], 3)) == 0
    yield "hamiltonian path", hamiltonian(path, _one([1, 1, 2], 2)) == 1
    yield "forb (1,1,2,2)", forb(_one([1, 1, 2, 2], 2)) == 2
    yield "forb (1,1,1)", forb(_one([1, 1, 1], 3)) == 3
    yield "overlap swap", np.allclose(np.asarray(overlap_matrix(_one([1, 1, 2, 2], 2), _one([2, 2, 1, 1], 2))), [[0, 1], [1, 0]])
    yield "overlap bar", np.allclose(np.asarray(overlap_matrix(_one([1, 1, 2, 2], 2), _one([1, 2, 1, 2], 2))), 0.5)
    yield "entropy uniform", math.isclose(entropy_vec(np.full(5, 0.2)), math.log(5), rel_tol=1e-14)
    yield "entropy point mass", entropy_vec([1.0, 0.0]) == 0.0
    yield "binary entropy 1/2", math.isclose(binary_entropy(0.5), math.log(2), rel_tol=1e-15)
    yield "entropy identity/k", math.isclose(entropy_matrix(np.eye(4) / 4), math.log(4), rel_tol=1e-14)
    yield "Z empty graph", math.isclose(z_enumerate(SimpleGraph.empty(2), 3, b).log_z, 2 * math.log(3), rel_tol=1e-14)
    yield "Z single edge = 7", math.isclose(math.exp(z_enumerate(edge, 3, math.log(3)).log_z), 7.0, rel_tol=1e-13)
    yield "Z K3 k=2", math.isclose(
        z_enumerate(K3, 2, b).log_z, math.log(2 * math.exp(-3 * b) + 6 * math.exp(-b)), rel_tol=1e-13
    )
    yield "Z fk single edge", math.isclose(math.exp(z_fk(edge, 3, math.log(3)).log_z), 7.0, rel_tol=1e-13)
    yield "gibbs uniform at beta=0", np.allclose(gibbs_exact(K3, 3, 0.0).probs, 1 / 27, rtol=1e-13)
    yield "annealed beta=0", annealed_free_energy(ModelParams(3, 10, 2.0, 0.0)) == math.log(3)
    p = ModelParams(2, 3, 4 / 3, b)
    yield "first moment sigma beta=0", exact_first_moment_sigma(_one([1, 1, 2], 2), p.with_(beta=0.0)) == 0.0
    yield "first moment n=2", math.isclose(
        exact_first_moment_total(ModelParams(3, 2, 1.0, b)).exact_value, math.log(3 * (2 + math.exp(-b))), rel_tol=1e-13
    )
    lp = LandscapeParams(3, 2.0, 0.0)
    rho = np.random.default_rng(0).dirichlet(np.ones(3), size=3)
    yield "f at beta=0 is entropy", f_eval(rho, lp) == entropy_matrix(rho / 3)
    yield "rho_0 == rho_bar", np.array_equal(np.asarray(make_rho_s(5, 0)), np.asarray(make_rho_bar(5)))
    yield "rho_k == identity", np.array_equal(np.asarray(make_rho_s(5, 5)), np.eye(5))
    yield "stability", stability_index(make_rho_bar(4)) == 0 and stability_index(make_rho_stable(4)) == 4
    yield "separable identity", is_separable_matrix(np.eye(4), 0.25)
    m = np.full((3, 3), 0.15)
    m[0, 0] = 0.7
    yield "band entry not separable", not is_separable_matrix(m, 0.25)
    G = sample_gnm(ModelParams(4, 4, 3.0, 1.0), SeededStream(1))
    yield "gnm K4", G.num_edges == 6


def run_selftest(stream=None) -> bool:
    ok = True
    for name, passed in _checks():
        passed = bool(passed)
        ok &= passed
        if stream is not None:
            print(f"{'PASS' if passed else 'FAIL'}  {name}", file=stream)
    return ok
