import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pottslab.ensembles import gnm
from pottslab.errors import ContractViolation
from pottslab.exact import gibbs_exact, z_enumerate
from pottslab.mcmc import (
    ChainState,
    GlauberChain,
    TISchedule,
    batch_means,
    detailed_balance_residual,
    empirical_distribution,
    estimate_mean_energy,
    free_energy_experiment,
    glauber_step,
    simpson_weights,
    thermo_integrate_exact,
    thermo_integrate_lnZ,
    total_variation,
    transition_matrix,
)
from pottslab.model import ColorAssignment, ModelParams, SimpleGraph, hamiltonian


@pytest.mark.parametrize("kernel", ["heat-bath", "metropolis"])
def test_transition_matrix_stochastic_and_reversible(kernel):
    G = gnm(4, 4, 1)
    T = transition_matrix(G, 3, 0.9, kernel)
    assert np.allclose(T.sum(axis=1), 1.0, atol=1e-14)
    assert T.min() >= 0
    assert detailed_balance_residual(G, 3, 0.9, kernel) < 1e-12
    mu = gibbs_exact(G, 3, 0.9).probs
    assert np.abs(mu @ T - mu).max() < 1e-14


def test_heat_bath_beta_zero_uniform_conditional():
    # from any state, a single update moves to each of the n k neighbours w.p. 1/(n k)
    G = SimpleGraph.complete(3)
    T = transition_matrix(G, 3, 0.0)
    assert np.allclose(T[0][T[0] > 0].sum(), 1.0)
    assert math.isclose(T[0, 0], 3 * (1 / 3) / 3, rel_tol=1e-14)
    assert np.allclose(T[0, [1, 3, 9]], 1 / 9, rtol=1e-14)


def test_isolated_vertex_uniform():
    G = SimpleGraph.from_pairs(3, [(0, 1)])
    gen = np.random.default_rng(0)
    colors = []
    chain = GlauberChain(G, 3, 5.0, np.array([0, 0, 0]))
    for _ in range(3000):
        chain.run(1, gen)
        colors.append(chain.state.colors[2])
    freq = np.bincount(colors, minlength=3) / len(colors)
    assert np.abs(freq - 1 / 3).max() < 0.05


@pytest.mark.parametrize("kernel", ["heat-bath", "metropolis"])
def test_energy_tracking_audited(kernel):
    G = gnm(30, 60, 2)
    chain = GlauberChain(G, 3, 1.2, kernel=kernel, rng=3)
    te, _ = chain.run(5000, 4, energy_trace=True, audit=True)
    assert chain.state.mono_edges == hamiltonian(G, chain.state.assignment)
    assert te[-1] == chain.state.mono_edges
    assert chain.state.step_count == 5000


def test_glauber_step_copies_state():
    G = gnm(5, 6, 0)
    s = ChainState(np.zeros(5, dtype=np.int64), 3, hamiltonian(G, ColorAssignment(np.zeros(5, dtype=int), 3)))
    new = glauber_step(s, G, ModelParams(3, 5, 2.4, 1.0), 7)
    assert new.step_count == 1
    assert np.array_equal(s.colors, np.zeros(5))
    assert new.mono_edges == hamiltonian(G, new.assignment)


def test_bad_kernel_and_colors():
    G = gnm(4, 3, 0)
    with pytest.raises(ContractViolation):
        GlauberChain(G, 3, 1.0, kernel="wolff")
    with pytest.raises(ContractViolation):
        GlauberChain(G, 3, 1.0, colors=[0, 1])


@pytest.mark.parametrize("kernel", ["heat-bath", "metropolis"])
def test_empirical_distribution_close_to_gibbs(kernel):
    G = gnm(5, 7, 3)
    emp = empirical_distribution(G, 3, 1.0, 300_000, 5, burn_in=1000, kernel=kernel)
    assert total_variation(emp, gibbs_exact(G, 3, 1.0).probs) < 0.03


def test_mean_energy_beta_zero():
    G = gnm(20, 40, 5)
    est = estimate_mean_energy(G, ModelParams(4, 20, 4.0, 0.0), 200_000, 6, burn_in=1000)
    assert abs(est.mean - 40 / 4) < 4 * est.std_error + 0.05


def test_mean_energy_matches_exact():
    G = gnm(10, 15, 11)
    p = ModelParams(3, 10, 3.0, 1.5)
    est = estimate_mean_energy(G, p, 400_000, 8)
    exact = gibbs_exact(G, 3, 1.5).mean_energy()
    assert abs(est.mean - exact) < 3 * est.std_error + 1e-3


def test_mean_energy_budget_check():
    G = gnm(10, 15, 11)
    with pytest.raises(ContractViolation):
        estimate_mean_energy(G, ModelParams(3, 10, 3.0, 1.0), 100, 0)


def test_batch_means():
    x = np.arange(100.0)
    m, se = batch_means(x, 10)
    assert m == 49.5 and se > 0
    with pytest.raises(ContractViolation):
        batch_means(np.ones(5), 10)


def test_simpson_weights_integrate_cubic_exactly():
    x = np.linspace(0, 2, 9)
    w = simpson_weights(9, x[1] - x[0])
    assert math.isclose(np.dot(w, x**3), 4.0, rel_tol=1e-14)


def test_schedule_validation():
    with pytest.raises(ContractViolation):
        TISchedule((0.5, 1.0, 1.5))
    with pytest.raises(ContractViolation):
        TISchedule((0.0, 1.0, 0.5))
    with pytest.raises(ContractViolation):
        TISchedule((0.0, 0.5))
    assert TISchedule.uniform(0.0).beta_grid == (0.0,)


def test_ti_beta_zero_exact():
    G = gnm(7, 9, 1)
    r = thermo_integrate_lnZ(G, ModelParams(3, 7, 2.6, 0.0), TISchedule.uniform(0.0), 0)
    assert r.log_z == 7 * math.log(3)
    assert thermo_integrate_exact(G, 3, 0.0).log_z == 7 * math.log(3)


def test_ti_quadrature_error_small():
    G = gnm(10, 15, 11)
    r = thermo_integrate_exact(G, 3, 2.0)
    assert abs(r.log_z - z_enumerate(G, 3, 2.0).log_z) < 1e-6


def test_ti_estimate_close():
    G = gnm(8, 12, 2)
    p = ModelParams(3, 8, 3.0, 1.5)
    r = thermo_integrate_lnZ(G, p, TISchedule.uniform(1.5, 17, 3000, 100), 3)
    exact = z_enumerate(G, 3, 1.5).log_z
    assert abs(r.log_z - exact) < 5 * r.total_error + 1e-3


def test_ti_schedule_must_end_at_beta():
    G = gnm(5, 5, 0)
    with pytest.raises(ContractViolation):
        thermo_integrate_lnZ(G, ModelParams(3, 5, 2.0, 1.0), TISchedule.uniform(0.5, 5), 0)


def test_free_energy_beta_zero():
    rows = free_energy_experiment(3, 2.0, 0.0, [6, 8], 5, 1)
    for r in rows:
        assert math.isclose(r.mean, math.log(3), rel_tol=1e-14)
        assert r.std < 1e-14


def test_free_energy_thread_independent():
    a = free_energy_experiment(3, 2.0, 1.0, [6], 8, 42, threads=1)
    b = free_energy_experiment(3, 2.0, 1.0, [6], 8, 42, threads=3)
    assert a == b


@given(st.integers(0, 2**32 - 1))
def test_chain_reproducible(seed):
    G = gnm(12, 18, 1)
    a = GlauberChain(G, 3, 1.0, rng=seed)
    b = GlauberChain(G, 3, 1.0, rng=seed)
    ta, _ = a.run(500, seed + 1, energy_trace=True)
    tb, _ = b.run(500, seed + 1, energy_trace=True)
    assert np.array_equal(ta, tb)
