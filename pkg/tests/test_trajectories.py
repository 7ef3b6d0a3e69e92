import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tctsim import backend
from tctsim.csvio import read_csv
from tctsim.dispersive import interaction_hamiltonian, two_qubit_hamiltonian
from tctsim.errors import EmptyEnsemble, MarkovViolation, ZeroNorm
from tctsim.lindblad import DensityMatrix, evolve_master, lindblad_rhs
from tctsim.postselection import LOWER
from tctsim.rng import CounterRNG
from tctsim.trajectories import (
    DetectionConfig,
    branch_probabilities,
    build_kraus_set,
    choose_outcome,
    click_update_a,
    click_update_both,
    ensemble_average,
    ensemble_rows,
    no_click_update,
    postselect_average,
    run_ensemble,
    run_trajectory,
    sample_step,
    step_propagator,
    write_click_log,
)

from conftest import random_density

TT = ["gg", "ge", "eg", "ee"]
LOSS_KEYS = ("01:00", "00:01", "01:01", "10:01", "01:10")


def pure(label):
    return DensityMatrix.pure(TT, label).data


def test_perfect_detection_has_no_loss_operators():
    ks = build_kraus_set(DetectionConfig(1.0, 1.0, 1.0, 0.3, 0.2))
    ops = ks.all()
    assert len(ops) == 9
    for key in LOSS_KEYS:
        assert np.all(ops[key] == 0)


def test_zero_rate_gives_identity():
    ops = build_kraus_set(DetectionConfig(0.5, 0.5, 1.0, 0.0, 0.0)).all()
    np.testing.assert_array_equal(ops["00:00"], np.eye(4))
    for key, k in ops.items():
        if key != "00:00":
            assert np.all(k == 0)


def test_completeness_example():
    cfg = DetectionConfig(0.8, 0.8, 1.0, 0.3, 0.3)
    assert cfg.p_a == pytest.approx(3e-4)
    assert build_kraus_set(cfg).completeness_residual() < 1e-6


def test_group_membership():
    ks = build_kraus_set(DetectionConfig(0.5, 0.5, 1.0, 0.3, 0.2))
    assert set(ks.no_click_group) == {"00:00", "01:00", "00:01", "01:01"}
    assert set(ks.click_a_group) == {"10:00", "10:01"}
    assert set(ks.click_b_group) == {"00:10", "01:10"}
    assert set(ks.click_both) == {"10:10"}


kraus_params = st.tuples(
    st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.1, 5.0), st.floats(0.0, 1.9), st.floats(0.0, 1.9)
)


@settings(max_examples=200, deadline=None)
@given(kraus_params)
def test_completeness_bound(params):
    eta_a, eta_b, dt, ga, gb = params
    cfg = DetectionConfig(eta_a, eta_b, dt, ga, gb)
    ks = build_kraus_set(cfg)
    p = max(cfg.p_a, cfg.p_b)
    assert ks.completeness_residual() <= 4 * p**2 + 1e-15
    for k in ks.all().values():
        assert np.linalg.norm(k, 2) <= 1 + 1e-12


@settings(max_examples=200, deadline=None)
@given(kraus_params, st.integers(0, 2**32 - 1), st.floats(0.0, 2.0))
def test_unconditional_step_is_euler_step(params, seed, g):
    """Summing all outcome branches gives one Euler step of the master equation, for any eta."""
    eta_a, eta_b, dt, ga, gb = params
    cfg = DetectionConfig(eta_a, eta_b, dt, ga, gb)
    rho = random_density(np.random.default_rng(seed))
    h = interaction_hamiltonian(g)
    u = step_propagator(h, dt)
    ks = build_kraus_set(cfg)
    avg = sum(u @ k @ rho @ k.conj().T @ u.conj().T for k in ks.all().values())
    dt_us = dt * 1e-3
    euler = rho + dt_us * lindblad_rhs(h, [(ga, LOWER[0]), (gb, LOWER[1])], rho)
    scale = max(ga, gb, 2 * g) * dt_us
    assert np.max(np.abs(avg - euler)) <= 4 * scale**2 + 1e-15


@settings(max_examples=100, deadline=None)
@given(kraus_params, st.integers(0, 2**32 - 1))
def test_outcome_probabilities(params, seed):
    ks = build_kraus_set(DetectionConfig(*params))
    probs = branch_probabilities(random_density(np.random.default_rng(seed)), ks)
    assert np.all(probs >= 0)
    assert abs(probs.sum() - 1) < 1e-4


def test_markov_guard():
    with pytest.raises(MarkovViolation):
        DetectionConfig(1.0, 1.0, 40.0, 0.3, 0.2)
    with pytest.raises(ValueError):
        DetectionConfig(1.2, 1.0, 1.0, 0.3, 0.2)


def test_ground_state_never_emits():
    cfg = DetectionConfig(0.8, 0.8, 1.0, 0.3, 0.2)
    u = step_propagator(interaction_hamiltonian(1.0), 1.0)
    new, prob = no_click_update(pure("gg"), build_kraus_set(cfg), u)
    assert prob == pytest.approx(1.0)
    np.testing.assert_allclose(new, pure("gg"), atol=1e-15)
    with pytest.raises(ZeroNorm):
        click_update_a(pure("gg"), build_kraus_set(cfg), u)


def test_no_click_probability_from_ee():
    cfg = DetectionConfig(1.0, 1.0, 1.0, 0.3, 0.2)
    _, prob = no_click_update(pure("ee"), build_kraus_set(cfg), np.eye(4))
    assert prob == pytest.approx((1 - cfg.p_a) * (1 - cfg.p_b), rel=1e-14)
    new, prob_both = click_update_both(pure("ee"), build_kraus_set(cfg), np.eye(4))
    assert prob_both == pytest.approx(cfg.p_a * cfg.p_b, rel=1e-12)
    np.testing.assert_allclose(new, pure("gg"))


def test_unmonitored_no_click_is_euler_step(rng):
    cfg = DetectionConfig(0.0, 0.0, 1.0, 0.3, 0.2)
    rho = random_density(rng)
    new, prob = no_click_update(rho, build_kraus_set(cfg), np.eye(4))
    euler = rho + cfg.dt_us * lindblad_rhs(np.zeros((4, 4)), [(0.3, LOWER[0]), (0.2, LOWER[1])], rho)
    assert np.max(np.abs(new * prob - euler)) < 4 * cfg.p_a**2


def test_choose_outcome():
    probs = np.array([0.5, 0.25, 0.25, 0.0])
    assert choose_outcome(probs, 0.0) == 0
    assert choose_outcome(probs, 0.6) == 1
    assert choose_outcome(probs, 0.8) == 2
    assert choose_outcome(probs, 1.0 - 1e-16) == 2


def test_click_rate_statistics():
    cfg = DetectionConfig(0.8, 0.8, 30.0, 0.3, 0.2)
    ks = build_kraus_set(cfg)
    probs = branch_probabilities(pure("eg"), ks)
    rng = CounterRNG(11)
    n = 20000
    clicks = sum(choose_outcome(probs, rng.random()) in (1, 3) for _ in range(n))
    p = 0.8 * cfg.p_a
    assert abs(clicks - n * p) < 3 * np.sqrt(n * p * (1 - p))


def test_sample_step_deterministic():
    cfg = DetectionConfig(0.8, 0.8, 30.0, 0.3, 0.2)
    ks = build_kraus_set(cfg)
    u = step_propagator(interaction_hamiltonian(1.0), cfg.dt)

    def run(seed):
        rng, r, out = CounterRNG(seed), pure("eg"), []
        for _ in range(200):
            o, r = sample_step(r, ks, u, rng)
            out.append(o)
        return out

    assert run(3) == run(3)


def test_trajectory_repeatable():
    cfg = DetectionConfig(0.8, 0.8, 1.0, 0.3, 0.2, seed=5)
    h = interaction_hamiltonian(1.0)
    a = run_trajectory(cfg, h, pure("eg"), 3.0, 100, trajectory_index=7)
    b = run_trajectory(cfg, h, pure("eg"), 3.0, 100, trajectory_index=7)
    np.testing.assert_array_equal(a.states, b.states)
    assert a.clicks == b.clicks
    assert a.survived_postselection == (not a.clicks)


def test_closed_exchange():
    cfg = DetectionConfig(1.0, 1.0, 1.0, 0.0, 0.0)
    g = 1.0
    rec = run_trajectory(cfg, interaction_hamiltonian(g), pure("eg"), 3.0, 50)
    np.testing.assert_allclose(rec.states[:, 2, 2].real, np.cos(g * rec.times) ** 2, atol=1e-12)
    assert rec.survived_postselection


def test_ground_start_no_clicks():
    cfg = DetectionConfig(1.0, 1.0, 1.0, 0.3, 0.2)
    res = run_ensemble(cfg, interaction_hamiltonian(1.0), pure("gg"), 2.0, 64, 100)
    assert res.clicks == []
    assert np.all(res.postselected.survival_fraction == 1.0)


def test_purity_conserved_at_unit_efficiency():
    cfg = DetectionConfig(1.0, 1.0, 10.0, 0.3, 0.2, seed=2)
    for k in range(5):
        rec = run_trajectory(cfg, interaction_hamiltonian(0.5), pure("eg"), 10.0, 10, trajectory_index=k)
        purity = np.einsum("tij,tji->t", rec.states, rec.states).real
        assert np.max(np.abs(purity - 1)) < 1e-6


def test_no_click_path_mixes_below_unit_efficiency():
    cfg = DetectionConfig(0.5, 0.5, 10.0, 0.3, 0.2)
    ks = build_kraus_set(cfg)
    u = step_propagator(interaction_hamiltonian(0.0), cfg.dt)
    r, purity = pure("eg"), [1.0]
    for _ in range(3000):
        r, _ = no_click_update(r, ks, u)
        purity.append(np.trace(r @ r).real)
    purity = np.array(purity)
    k = int(np.argmin(purity))
    assert purity[k] < 0.9
    # loss channels mix the conditional state until its purity minimum
    assert np.all(np.diff(purity[: k + 1]) <= 1e-15)


def test_single_trajectory_ensemble_matches_record():
    cfg = DetectionConfig(0.8, 0.8, 1.0, 0.3, 0.2, seed=9)
    h = interaction_hamiltonian(1.0)
    res = ensemble_average(cfg, h, pure("eg"), 2.0, 1, sample_every=50)
    rec = run_trajectory(cfg, h, pure("eg"), 2.0, 50, trajectory_index=0)
    np.testing.assert_allclose(res.mean, rec.states, atol=1e-12)
    assert np.all(res.stderr == 0)


def test_standard_error_scaling():
    # eta = 0 keeps every record identical, so monitor to get a spread
    cfg = DetectionConfig(0.8, 0.8, 2.0, 0.3, 0.2, seed=4)
    h = interaction_hamiltonian(1.0)
    small = run_ensemble(cfg, h, pure("eg"), 6.0, 1000, 300)
    large = run_ensemble(cfg, h, pure("eg"), 6.0, 2000, 300)
    mask = small.stderr.real > 1e-3
    ratio = np.median(large.stderr.real[mask] / small.stderr.real[mask])
    assert abs(ratio - 1 / np.sqrt(2)) < 0.2 / np.sqrt(2)


def test_unmonitored_postselection_is_full_average():
    cfg = DetectionConfig(0.0, 0.0, 1.0, 0.3, 0.2, seed=1)
    h = interaction_hamiltonian(1.0)
    post = postselect_average(cfg, h, pure("eg"), 3.0, 64, sample_every=100)
    me = evolve_master(h, [(0.3, LOWER[0]), (0.2, LOWER[1])], DensityMatrix.pure(TT, "eg"), post.times, 1e-3)
    assert np.all(post.survival_fraction == 1.0)
    assert np.max(np.abs(post.mean - me.states)) < 1e-3


def test_empty_postselection():
    cfg = DetectionConfig(1.0, 1.0, 30.0, 0.3, 0.3, seed=1)
    with pytest.raises(EmptyEnsemble):
        postselect_average(cfg, np.zeros((4, 4)), pure("ee"), 300.0, 4, sample_every=10000)


def test_thread_count_does_not_change_result():
    cfg = DetectionConfig(0.8, 0.8, 1.0, 0.3, 0.2, seed=3)
    h = two_qubit_hamiltonian(0.1, -0.1, 1.0)
    a = run_ensemble(cfg, h, pure("eg"), 2.0, 300, 100, threads=1)
    b = run_ensemble(cfg, h, pure("eg"), 2.0, 300, 100, threads=4)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.stderr, b.stderr)
    assert a.clicks == b.clicks


@pytest.mark.skipif("cython" not in backend.available(), reason="compiled kernels not built")
def test_backends_agree():
    cfg = DetectionConfig(0.8, 0.8, 1.0, 0.3, 0.2, seed=8)
    h = interaction_hamiltonian(1.0)
    a = run_ensemble(cfg, h, pure("eg"), 3.0, 500, 100, backend="cython")
    b = run_ensemble(cfg, h, pure("eg"), 3.0, 500, 100, backend="python")
    assert a.backend == "cython" and b.backend == "python"
    assert a.clicks == b.clicks
    assert np.max(np.abs(a.mean - b.mean)) < 1e-12
    np.testing.assert_array_equal(a.postselected.n_survivors, b.postselected.n_survivors)


def test_backend_selection(monkeypatch):
    assert backend.select("python").NAME == "python"
    with pytest.raises(ValueError):
        backend.select("fortran")
    monkeypatch.setenv(backend.ENV_VAR, "python")
    assert backend.select().NAME == "python"


def test_outputs(tmp_path):
    cfg = DetectionConfig(1.0, 1.0, 1.0, 0.3, 0.2, seed=2)
    res = run_ensemble(cfg, interaction_hamiltonian(1.0), pure("eg"), 2.0, 200, 100)
    header, rows = ensemble_rows(res.times, res.mean, res.stderr, {"survival_fraction": res.postselected.survival_fraction})
    assert len(header) == 1 + 64 + 1 and header[1] == "re_gg_gg" and header[2] == "re_ge_gg"
    assert rows[0][1 + 10] == 1.0  # re <eg|rho|eg> at t = 0, column-stacked index 10
    write_click_log(tmp_path / "c.csv", res)
    h, body = read_csv(tmp_path / "c.csv")
    assert h == ["trajectory_id", "time_ns", "detector"]
    assert len(body) == len(res.clicks) > 0
    assert all(b[2] in ("a", "b", "both") for b in body)
    assert all(float(b[1]) % 1.0 == 0.5 for b in body)
