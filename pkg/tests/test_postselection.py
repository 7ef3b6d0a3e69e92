import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tctsim.dispersive import interaction_hamiltonian, two_qubit_hamiltonian
from tctsim.entanglement import log_negativity_series
from tctsim.errors import DimensionMismatch, MarkovViolation, NormUnderflow
from tctsim.lindblad import DensityMatrix, evolve_master, lindblad_rhs, superoperator
from tctsim.postselection import (
    EXCITED,
    LOWER,
    PostselectedModel,
    evolve_postselected_linear,
    evolve_postselected_nonlinear,
    evolve_sme,
    jump_map,
    linear_rhs,
    linear_superoperator,
    postselected_rhs,
    sme_ensemble,
    unmonitored_rhs,
)
from tctsim.rng import CounterRNG
from tctsim.trajectories import DetectionConfig, run_ensemble

from conftest import random_density

TT = ["gg", "ge", "eg", "ee"]
H = two_qubit_hamiltonian(0.05, -0.05, 1.0)


def model(eta, h=H):
    return PostselectedModel(h, 0.3, 0.2, eta, eta)


def me_jumps():
    return [(0.3, LOWER[0]), (0.2, LOWER[1])]


def test_unmonitored_reduces_to_master_equation(rng):
    rho = random_density(rng)
    np.testing.assert_allclose(postselected_rhs(model(0.0), rho), lindblad_rhs(H, me_jumps(), rho), atol=1e-15)
    np.testing.assert_allclose(unmonitored_rhs(model(0.7), rho), lindblad_rhs(H, me_jumps(), rho), atol=1e-15)


def test_unmonitored_generator_identity():
    np.testing.assert_allclose(linear_superoperator(model(0.0)), superoperator(H, me_jumps()), atol=1e-15)


def test_ground_state_only_coherent():
    rho = DensityMatrix.pure(TT, "gg").data
    out = postselected_rhs(model(0.8), rho)
    np.testing.assert_allclose(out, -1j * (H @ rho - rho @ H), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_term_by_term_reconstruction(seed, eta):
    rho = random_density(np.random.default_rng(seed))
    out = -1j * (H @ rho - rho @ H)
    for g, sig, n in zip((0.3, 0.2), LOWER, EXCITED):
        out += (1 - eta) * g * (sig @ rho @ sig.conj().T - 0.5 * (n @ rho + rho @ n))
        out += eta * g * (np.trace(n @ rho).real * rho - 0.5 * (n @ rho + rho @ n))
    np.testing.assert_allclose(postselected_rhs(model(eta), rho), out, atol=1e-14)
    assert abs(np.trace(postselected_rhs(model(eta), rho))) < 1e-12


def test_linear_rhs_stacks(rng):
    rhos = np.array([random_density(rng) for _ in range(3)])
    stacked = linear_rhs(model(0.5), rhos)
    for r, s in zip(rhos, stacked):
        np.testing.assert_allclose(linear_rhs(model(0.5), r), s, atol=1e-15)
    with pytest.raises(DimensionMismatch):
        linear_rhs(model(0.5), np.eye(3))


def test_model_validation():
    with pytest.raises(ValueError):
        PostselectedModel(H, 0.3, 0.2, 1.5, 0.0)
    with pytest.raises(ValueError):
        PostselectedModel(H, -0.3, 0.2, 0.5, 0.0)


@pytest.mark.parametrize("eta", [0.0, 0.8, 1.0])
def test_linear_equals_nonlinear(eta):
    rho0 = DensityMatrix.pure(TT, "eg")
    t = np.linspace(0, 15, 31)
    lin = evolve_postselected_linear(model(eta), rho0, t)
    non = evolve_postselected_nonlinear(model(eta), rho0, t)
    assert np.max(np.abs(lin.states - non.states)) < 1e-7
    assert np.max(np.abs(lin.log_survival - non.log_survival)) < 1e-6
    assert np.all(np.abs(np.einsum("tii->t", lin.states) - 1) < 1e-12)


def test_perfect_postselection_keeps_coherence():
    rho0 = DensityMatrix.pure(TT, "eg")
    t = np.linspace(0, 30, 61)
    post = evolve_postselected_linear(model(1.0, interaction_hamiltonian(1.0)), rho0, t)
    me = evolve_master(interaction_hamiltonian(1.0), me_jumps(), rho0, t, 1e-3)
    purity = np.einsum("tij,tji->t", post.states, post.states).real
    np.testing.assert_allclose(purity, 1.0, atol=1e-9)
    en = log_negativity_series(post.states)
    assert en[-10:].max() > 0.5
    assert log_negativity_series(me.states)[-10:].max() < 0.1


@pytest.mark.parametrize("g", [1.0, 0.2])
@pytest.mark.parametrize("eta", [0.8, 1.0])
def test_slower_entanglement_decay(eta, g):
    rho0 = DensityMatrix.pure(TT, "eg")
    t = np.linspace(0, 15, 301)
    h = interaction_hamiltonian(g)
    post = log_negativity_series(evolve_postselected_linear(model(eta, h), rho0, t).states)
    me = log_negativity_series(evolve_master(h, me_jumps(), rho0, t, 1e-3).states)
    assert np.all(post[1:] >= me[1:] - 1e-12)


def test_norm_underflow():
    rho0 = DensityMatrix.pure(TT, "ee")
    m = PostselectedModel(np.zeros((4, 4)), 30.0, 30.0, 1.0, 1.0)
    with pytest.raises(NormUnderflow):
        evolve_postselected_linear(m, rho0, [0.0, 1.0], dt=1e-3)


def test_survival_weight_matches_trajectories():
    h = interaction_hamiltonian(1.0)
    cfg = DetectionConfig(0.8, 0.8, 1.0, 0.3, 0.2, seed=21)
    res = run_ensemble(cfg, h, DensityMatrix.pure(TT, "eg"), 6.0, 2000, 500)
    lin = evolve_postselected_linear(model(0.8, h), DensityMatrix.pure(TT, "eg"), res.times)
    f = res.postselected.survival_fraction
    se = np.sqrt(np.maximum(f * (1 - f), 1e-12) / 2000)
    assert np.all(np.abs(f - lin.survival_weight) <= 3 * se + 1e-3)


def test_sme_unmonitored_is_deterministic():
    rho0 = DensityMatrix.pure(TT, "eg")
    rec = evolve_sme(model(0.0), rho0, 2.0, CounterRNG(1), dt_ns=1.0, sample_every=100)
    me = evolve_master(H, me_jumps(), rho0, rec.times, 1e-3)
    assert rec.clicks == []
    assert np.max(np.abs(rec.states - me.states)) < 1e-9


def test_jump_resets_transmon():
    rho = DensityMatrix.pure(TT, "eg").data
    out = jump_map(rho, 0)
    np.testing.assert_allclose(out, DensityMatrix.pure(TT, "gg").data)


def test_sme_markov_guard():
    with pytest.raises(MarkovViolation):
        evolve_sme(model(1.0), DensityMatrix.pure(TT, "eg"), 1.0, CounterRNG(0), dt_ns=50.0)


def test_sme_single_record_matches_batch():
    rho0 = DensityMatrix.pure(TT, "eg")
    m = PostselectedModel(H, 3.0, 2.0, 0.9, 0.9)
    rec = evolve_sme(m, rho0, 1.0, CounterRNG(4, 0), dt_ns=1.0, sample_every=100)
    batch = sme_ensemble(m, rho0, 1.0, 1, seed=4, dt_ns=1.0, sample_every=100)
    # the batch draws detector x of step s at counter 2s + x, exactly as the sequential record
    np.testing.assert_allclose(batch.mean, rec.states, atol=1e-12)


def test_sme_statistics_match_kraus_engine():
    h = interaction_hamiltonian(1.0)
    rho0 = DensityMatrix.pure(TT, "eg")
    sme = sme_ensemble(model(0.8, h), rho0, 5.0, 2000, seed=3, dt_ns=1.0, sample_every=250)
    kr = run_ensemble(DetectionConfig(0.8, 0.8, 1.0, 0.3, 0.2, seed=5), h, rho0, 5.0, 2000, 250)
    diff = sme.mean - kr.mean
    tol_re = 3 * np.hypot(sme.stderr.real, kr.stderr.real) + 1e-3
    tol_im = 3 * np.hypot(sme.stderr.imag, kr.stderr.imag) + 1e-3
    within = (np.abs(diff.real) <= tol_re) & (np.abs(diff.imag) <= tol_im)
    assert within.mean() >= 0.99
