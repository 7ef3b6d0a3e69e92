"""Acceptance criteria, each at its stated tolerance; one pass/fail line per criterion."""
import filecmp
import time

import numpy as np
import pytest

from tctsim import cli
from tctsim.config import load_config
from tctsim.dispersive import interaction_hamiltonian
from tctsim.entanglement import log_negativity_series
from tctsim.figures import AGREEMENT_FLOOR, derive_circuit, three_tier_dynamics, trajectory_study, tt_pure
from tctsim.lindblad import lindblad_rhs
from tctsim.liouvillian import (
    analytic_eigenvalues,
    build_liouvillian,
    discriminant,
    eigendecompose,
    ep_location,
    expand_multiset,
    match_spectra,
    reconstruct_evolution,
)
from tctsim.postselection import LOWER, PostselectedModel, evolve_postselected_linear
from tctsim.trajectories import DetectionConfig, branch_probabilities, build_kraus_set, step_propagator

from conftest import random_density, verdict

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def study(circuit):
    cfg = load_config(threads=4)
    t0 = time.perf_counter()
    res = trajectory_study(cfg, circuit)
    res["seconds"] = time.perf_counter() - t0
    return res


def within(mean, stderr, ref):
    d = mean - ref
    return (np.abs(d.real) <= 3 * stderr.real + AGREEMENT_FLOOR) & (np.abs(d.imag) <= 3 * stderr.imag + AGREEMENT_FLOOR)


def test_criterion_01_avoided_crossing(paper_config):
    t0 = time.perf_counter()
    c = derive_circuit(paper_config)
    seconds = time.perf_counter() - t0
    two_g = 2 * abs(c.params.g_eg)
    rel = abs(c.gap - two_g) / two_g
    ok = abs(c.flux_star - 0.2945) <= 0.001 and rel < 0.05 and seconds < 30
    verdict(1, "avoided crossing", ok,
            f"flux {c.flux_star:.6f}, gap {c.gap * 1e3:.4f} MHz vs 2G {two_g * 1e3:.4f} MHz "
            f"({rel:.2%}), {seconds:.2f} s")


def test_criterion_02_three_tier_equivalence(paper_config, circuit):
    t0 = time.perf_counter()
    res = three_tier_dynamics(paper_config, circuit)
    seconds = time.perf_counter() - t0
    full, _, tt = res["tiers"]
    pops = [(i, i) for i in range(4)]
    dp = max(np.max(np.abs(full[:, i, j].real - tt[:, i, j].real)) for i, j in pops)
    de = np.max(np.abs(log_negativity_series(full) - log_negativity_series(tt)))
    ok = dp < 0.02 and de < 0.03 and seconds < 120
    verdict(2, "three-tier equivalence", ok,
            f"max population diff {dp:.4f} (< 0.02), max E_N diff {de:.4f} (< 0.03), {seconds:.1f} s")


def test_criterion_03_trajectories_match_master_equation(study):
    ens = study["runs"][0.0]["ensemble"]
    ok_t = within(ens.mean, ens.stderr, study["master"].states)
    max_se = max(ens.stderr.real.max(), ens.stderr.imag.max())
    ok = bool(ok_t.all()) and max_se < 0.02 and ens.n_traj == 2000 and study["seconds"] < 300
    verdict(3, "trajectory / master-equation agreement", ok,
            f"{ok_t.mean():.1%} of elements within 3 SE + {AGREEMENT_FLOOR:g}, max SE {max_se:.4f}, "
            f"{ens.n_traj} trajectories, all efficiencies in {study['seconds']:.0f} s on 4 threads")


def test_criterion_04_postselection_consistency(study):
    parts, ok = [], study["seconds"] < 300
    for eta in (0.8, 1.0):
        run = study["runs"][eta]
        post, ref = run["ensemble"].postselected, run["postselected_me"]
        ok_t = within(post.mean, post.stderr, ref.states)
        ok &= bool(ok_t.all())
        parts.append(f"eta={eta:g}: {ok_t.mean():.1%} within 3 SE")
    var = study["runs"][1.0]["ensemble"].postselected.variance.max()
    ok &= var < 1e-10
    verdict(4, "postselection consistency", ok, f"{'; '.join(parts)}; max variance at eta=1 {var:.1e}")


def test_criterion_05_entanglement_preservation(circuit):
    cfg = load_config()
    tc = cfg.trajectories
    h = circuit.tt.in_megahertz("rotating")
    times = np.arange(0, tc.t_final_us + 1e-9, tc.sample_every * tc.dt_ns * 1e-3)
    rho0 = tt_pure("eg")
    model = PostselectedModel(h, tc.gamma_a10, tc.gamma_b10)
    en = {eta: log_negativity_series(evolve_postselected_linear(model.with_efficiency(eta), rho0, times).states)
          for eta in (0.0, 0.8, 1.0)}
    me = en[0.0]
    first_min = next(i for i in range(1, len(me) - 1) if me[i - 1] > me[i] <= me[i + 1])
    gap = en[1.0][first_min] - me[first_min]
    after = slice(first_min + 1, None)
    between = (me[after] < en[0.8][after]) & (en[0.8][after] < en[1.0][after])
    ok = gap >= 0.3 and bool(between.all())
    verdict(5, "entanglement preservation", ok,
            f"at t = {times[first_min]:.2f} us E_N(eta=1) - E_N(unmonitored) = {gap:.4f} (need >= 0.3); "
            f"eta=0.8 strictly between at {between.mean():.1%} of later samples")


def test_criterion_06_analytic_spectrum():
    rng = np.random.default_rng(606)
    t0 = time.perf_counter()
    worst, mult_ok = 0.0, True
    for _ in range(50):
        ga, gb = rng.uniform(0.05, 2.0, 2)
        g, eta = rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0)
        lv = build_liouvillian(PostselectedModel(interaction_hamiltonian(g), ga, gb, eta, eta), "interaction")
        lam = eigendecompose(lv).eigenvalues
        pairs = analytic_eigenvalues(ga, gb, g)
        scale = max(1.0, max(abs(v) for v, _ in pairs))
        num, ref = match_spectra(lam, expand_multiset(pairs))
        worst = max(worst, np.max(np.abs(num - ref)) / scale)
        tol = 1e-9 * scale
        for value, _ in pairs:
            expected = sum(m for v, m in pairs if abs(v - value) < tol)
            mult_ok &= int(np.sum(np.abs(lam - value) < tol)) == expected
    seconds = time.perf_counter() - t0
    multiplicities = [m for _, m in analytic_eigenvalues(0.3, 0.2, 1.0)]
    ok = worst < 1e-9 and mult_ok and multiplicities == [1, 4, 1, 1, 1, 2, 2, 2, 2] and seconds < 10
    verdict(6, "analytic spectrum", ok,
            f"max relative error {worst:.1e} over 50 sets, multiplicities {multiplicities}, {seconds:.2f} s")


def test_criterion_07_efficiency_invariance(circuit):
    h = circuit.tt.in_megahertz("lab").copy()
    h[1, 2] = h[2, 1] = 1.0
    dev = 0.0
    for frame, ham in (("lab", h), ("interaction", interaction_hamiltonian(1.0))):
        spectra = [eigendecompose(build_liouvillian(PostselectedModel(ham, 0.3, 0.2, e, e), frame)).eigenvalues
                   for e in (0.0, 0.5, 1.0)]
        for lam in spectra[1:]:
            a, b = match_spectra(lam, spectra[0])
            dev = max(dev, float(np.max(np.abs(a - b))))
    etas = np.linspace(0.0, 1.0, 11)
    c1 = []
    for e in etas:
        dec = eigendecompose(build_liouvillian(PostselectedModel(h, 0.3, 0.2, e, e), "lab"), tt_pure("eg"))
        c1.append(dec.coefficients[dec.nearest(0.0)].real)
    c1 = np.array(c1)
    ok = dev < 1e-10 and bool(np.all(np.diff(c1) < 0)) and abs(c1[-1]) < 1e-10
    verdict(7, "efficiency invariance", ok,
            f"max spectral deviation {dev:.1e}, C1 from {c1[0]:.3f} to {c1[-1]:.1e}, decreasing {np.all(np.diff(c1) < 0)}")


def test_criterion_08_exceptional_point():
    g_ep = ep_location(0.3, 0.2)
    disc = discriminant(0.3, 0.2, g_ep)
    window = g_ep * (1 + np.linspace(-1e-3, 1e-3, 201))
    conds = [eigendecompose(build_liouvillian(PostselectedModel(interaction_hamiltonian(g), 0.3, 0.2), "interaction"),
                            warn=False).condition_number for g in window]
    ok = abs(g_ep - 0.025) < 1e-15 and abs(disc) < 1e-15 and max(conds) > 1e6
    verdict(8, "exceptional point", ok,
            f"G_ep = {g_ep:.6f} MHz, discriminant {disc:.1e}, max condition number within 0.1% {max(conds):.2e}")


def _pt_populations(g, t):
    lv = build_liouvillian(PostselectedModel(interaction_hamiltonian(g), 0.3, 0.2, 1.0, 1.0), "interaction")
    ev = reconstruct_evolution(eigendecompose(lv, tt_pure("eg")), t, generator=lv.data)
    return np.einsum("tii->ti", ev.states).real


def test_criterion_09_pt_phases():
    omega = 0.5 * np.sqrt(4 * 0.03**2 - 0.05**2)
    period = np.pi / omega
    t = np.linspace(0.0, 10 * period, 20001)
    p = _pt_populations(0.03, t)
    amps = np.array([[np.ptp(p[(t >= k * period) & (t <= (k + 1) * period), i]) for k in range(10)] for i in (1, 2)])
    decay = float(np.max(1 - amps.min(axis=1) / amps.max(axis=1)))

    lam = analytic_eigenvalues(0.3, 0.2, 0.02)
    transient = np.log(100) / (lam[3][0] - lam[4][0]).real
    # past ~8 transients the remaining approach (~1e-11) nears double-precision jitter
    t2 = np.linspace(0.0, 8 * transient, 8001)
    q = _pt_populations(0.02, t2)
    late = np.diff(q[t2 >= transient], axis=0)
    monotone = all(np.all(late[:, i] <= 0) or np.all(late[:, i] >= 0) for i in range(4))
    ok = decay <= 0.01 and monotone
    verdict(9, "PT phases", ok,
            f"G=0.03: amplitude change over 10 periods {decay:.1e}; "
            f"G=0.02: monotone after {transient:.0f} us transient {monotone}")


def test_criterion_10_kraus_property_suite():
    rng = np.random.default_rng(1010)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(1000):
        eta_a, eta_b = rng.uniform(0, 1, 2)
        dt = rng.uniform(0.1, 5.0)
        ga, gb = rng.uniform(0, 1.9, 2)
        g = rng.uniform(0, 2)
        cfg = DetectionConfig(eta_a, eta_b, dt, ga, gb)
        ks = build_kraus_set(cfg)
        p = max(cfg.p_a, cfg.p_b)
        rho = random_density(rng)
        h = interaction_hamiltonian(g)
        u = step_propagator(h, dt)
        avg = sum(u @ k @ rho @ k.conj().T @ u.conj().T for k in ks.all().values())
        euler = rho + cfg.dt_us * lindblad_rhs(h, [(ga, LOWER[0]), (gb, LOWER[1])], rho)
        scale = max(ga, gb, 2 * g) * cfg.dt_us
        probs = branch_probabilities(rho, ks)
        good = (
            ks.completeness_residual() < 4 * p**2 + 1e-15
            and all(np.linalg.norm(k, 2) <= 1 + 1e-12 for k in ks.all().values())
            and np.max(np.abs(avg - euler)) <= 4 * scale**2 + 1e-15
            and np.all(probs >= 0)
            and abs(probs.sum() - 1) <= 4 * p**2 + 1e-15
        )
        failures += not good
    seconds = time.perf_counter() - t0
    ok = failures == 0 and seconds < 30
    verdict(10, "Kraus property suite", ok, f"{1000 - failures}/1000 cases pass in {seconds:.1f} s")


SMALL = """
[spectrum]
flux_points = 6
zoom_points = 5
[dynamics]
t_final_us = 0.1
[trajectories]
n_traj = 200
t_final_us = 1
sample_every = 100
[liouvillian]
g_points = 6
dynamics_points = 11
ep_points = 6
pt_t_final_us = 100
pt_points = 51
"""


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    dirs = []
    for threads in (1, 1, 8, 8):
        out = tmp_path / f"run{len(dirs)}_t{threads}"
        assert cli.main(["all", "--config", str(cfg), "--out", str(out), "--seed", "11",
                         "--threads", str(threads), "--no-svg"]) == 0
        dirs.append(out)
    names = sorted(p.name for p in dirs[0].glob("*.csv"))
    mismatched = [n for d in dirs[1:] for n in names if not filecmp.cmp(dirs[0] / n, d / n, shallow=False)]
    same_sets = all(sorted(p.name for p in d.glob("*.csv")) == names for d in dirs)
    ok = same_sets and not mismatched and len(names) > 10
    verdict(11, "determinism", ok,
            f"{len(names)} CSVs byte-identical across two runs each at 1 and 8 threads"
            if ok else f"mismatched: {mismatched}")
