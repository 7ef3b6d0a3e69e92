"""Photodetection trajectories of two decaying qubits with lossy detectors.

Each qubit x emits into a monitored channel (efficiency eta_x) and a loss
channel. Over one step dt a qubit undergoes one of three single-qubit Kraus
branches: no emission ``diag(1, sqrt(1 - p))``, emission into the loss channel
``sqrt((1 - eta) p) |g><e|`` or a detector click ``sqrt(eta p) |g><e|``, with
``p = Gamma dt``. Tensoring gives nine two-qubit operators, grouped by what
the detectors report: none, a, b or both.

A step applies the Kraus map of the observed group, then the unitary
``U = exp(-i H dt)``, then renormalizes. Units: H and rates in MHz
(angular, per microsecond), dt in ns, times returned in microseconds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend as _backend
from .csvio import write_csv
from .errors import EmptyEnsemble, MarkovViolation, ZeroNorm
from .lindblad import DensityMatrix, unvec, vec
from .rng import CounterRNG

OUTCOMES = ("none", "a", "b", "both")
MARKOV_LIMIT = 0.01
ZERO_NORM = 1e-15
SIGMA = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|, basis (g, e)
TT_LABELS = ("gg", "ge", "eg", "ee")


@dataclass(frozen=True)
class DetectionConfig:
    eta_a: float
    eta_b: float
    dt: float
    gamma_a10: float
    gamma_b10: float
    seed: int = 0

    def __post_init__(self):
        for name in ("eta_a", "eta_b"):
            eta = getattr(self, name)
            if not 0.0 <= eta <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {eta}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.gamma_a10 < 0 or self.gamma_b10 < 0:
            raise ValueError("decay rates must be non-negative")
        if max(self.p_a, self.p_b) >= MARKOV_LIMIT:
            raise MarkovViolation(
                f"Gamma dt = {max(self.p_a, self.p_b):.3g} is not small against 1 (limit {MARKOV_LIMIT})"
            )

    @property
    def dt_us(self) -> float:
        return self.dt * 1e-3

    @property
    def p_a(self) -> float:
        return self.gamma_a10 * self.dt_us

    @property
    def p_b(self) -> float:
        return self.gamma_b10 * self.dt_us


def single_qubit_branches(p: float, eta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(no emission, loss, click) 2x2 blocks for emission probability p."""
    none = np.diag([1.0, np.sqrt(1.0 - p)]).astype(complex)
    loss = np.sqrt((1.0 - eta) * p) * SIGMA
    click = np.sqrt(eta * p) * SIGMA
    return none, loss, click


@dataclass(frozen=True)
class KrausSet:
    """Nine operators keyed ``'ij:kl'``; i/k flag a click, j/l a loss, for a/b."""

    no_click_group: dict
    click_a_group: dict
    click_b_group: dict
    click_both: dict

    @property
    def groups(self) -> tuple[dict, dict, dict, dict]:
        return (self.no_click_group, self.click_a_group, self.click_b_group, self.click_both)

    def all(self) -> dict:
        out = {}
        for g in self.groups:
            out.update(g)
        return out

    def effect(self, outcome: int) -> np.ndarray:
        """sum K^dag K over one outcome group."""
        return sum(k.conj().T @ k for k in self.groups[outcome].values())

    def completeness_residual(self) -> float:
        total = sum(self.effect(o) for o in range(4))
        return float(np.linalg.norm(total - np.eye(4), 2))


def build_kraus_set(cfg: DetectionConfig) -> KrausSet:
    blocks_a = dict(zip("0lc", single_qubit_branches(cfg.p_a, cfg.eta_a)))
    blocks_b = dict(zip("0lc", single_qubit_branches(cfg.p_b, cfg.eta_b)))
    code = {"0": "00", "l": "01", "c": "10"}
    groups = ({}, {}, {}, {})
    for ka, a in blocks_a.items():
        for kb, b in blocks_b.items():
            outcome = (ka == "c") + 2 * (kb == "c")
            groups[outcome][f"{code[ka]}:{code[kb]}"] = np.kron(a, b)
    return KrausSet(*groups)


def step_propagator(h, dt_ns: float) -> np.ndarray:
    """exp(-i H dt) for Hermitian H in MHz and dt in ns."""
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (v * np.exp(-1j * w * dt_ns * 1e-3)) @ v.conj().T


def _rho(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def branch_probabilities(rho, kraus: KrausSet) -> np.ndarray:
    r = _rho(rho)
    return np.array([max(np.trace(kraus.effect(o) @ r).real, 0.0) for o in range(4)])


def _update(rho, group: dict, u: np.ndarray) -> tuple[np.ndarray, float]:
    r = _rho(rho)
    mapped = sum(k @ r @ k.conj().T for k in group.values())
    norm = float(np.trace(mapped).real)
    if norm < ZERO_NORM:
        raise ZeroNorm(f"outcome has probability {norm:.3e}")
    return u @ mapped @ u.conj().T / norm, norm


def no_click_update(rho, kraus: KrausSet, u: np.ndarray) -> tuple[np.ndarray, float]:
    return _update(rho, kraus.no_click_group, u)


def click_update_a(rho, kraus: KrausSet, u: np.ndarray) -> tuple[np.ndarray, float]:
    return _update(rho, kraus.click_a_group, u)


def click_update_b(rho, kraus: KrausSet, u: np.ndarray) -> tuple[np.ndarray, float]:
    return _update(rho, kraus.click_b_group, u)


def click_update_both(rho, kraus: KrausSet, u: np.ndarray) -> tuple[np.ndarray, float]:
    return _update(rho, kraus.click_both, u)


def choose_outcome(probs, x: float) -> int:
    """First outcome whose cumulative weight exceeds ``x * total``.

    Probabilities are renormalized by their sum. Shared with the compiled
    kernels so that every backend draws the same records.
    """
    total = probs[0] + probs[1] + probs[2] + probs[3]
    target = x * total
    cum = 0.0
    last = 0
    for o in range(4):
        if probs[o] > 0.0:
            last = o
        cum += probs[o]
        if target < cum:
            return o
    return last


def sample_step(rho, kraus: KrausSet, u: np.ndarray, rng: CounterRNG) -> tuple[str, np.ndarray]:
    o = choose_outcome(branch_probabilities(rho, kraus), rng.random())
    new, _ = _update(rho, kraus.groups[o], u)
    return OUTCOMES[o], new


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    states: np.ndarray
    clicks: list = field(default_factory=list)

    @property
    def survived_postselection(self) -> bool:
        return not self.clicks


def _grid(t_final_us: float, dt_ns: float, sample_every: int) -> tuple[int, np.ndarray]:
    n_steps = int(round(t_final_us * 1e3 / dt_ns))
    if n_steps < 0 or abs(n_steps * dt_ns - t_final_us * 1e3) > 1e-6 * dt_ns:
        raise ValueError("t_final must be a non-negative multiple of dt")
    if sample_every < 1 or n_steps % sample_every:
        raise ValueError("the number of steps must be a multiple of sample_every")
    times = np.arange(n_steps // sample_every + 1) * sample_every * dt_ns * 1e-3
    return n_steps, times


def run_trajectory(
    cfg: DetectionConfig,
    h,
    rho0,
    t_final: float,
    sample_every: int = 1,
    trajectory_index: int = 0,
) -> TrajectoryRecord:
    """One conditional record up to ``t_final`` (us), sampled every few steps."""
    n_steps, times = _grid(t_final, cfg.dt, sample_every)
    kraus = build_kraus_set(cfg)
    u = step_propagator(h, cfg.dt)
    rng = CounterRNG(cfg.seed, trajectory_index)
    r = _rho(rho0).copy()
    states = [r]
    clicks = []
    for s in range(n_steps):
        outcome, r = sample_step(r, kraus, u, rng)
        if outcome != "none":
            clicks.append(((s + 0.5) * cfg.dt, outcome))
        if (s + 1) % sample_every == 0:
            states.append(r)
    return TrajectoryRecord(times=times, states=np.array(states), clicks=clicks)


def branch_superoperators(kraus: KrausSet, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-stacked maps and probability functionals of the four outcomes.

    ``S[o] @ vec(rho)`` is the unnormalized post-step state and
    ``W[o] @ vec(rho)`` its probability.
    """
    uu = np.kron(u.conj(), u)
    s = np.empty((4, 16, 16), dtype=complex)
    w = np.empty((4, 16), dtype=complex)
    for o, group in enumerate(kraus.groups):
        s[o] = uu @ sum(np.kron(k.conj(), k) for k in group.values())
        w[o] = vec(kraus.effect(o).T)
    return s, w


@dataclass
class PostselectedEnsemble:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    variance: np.ndarray
    survival_fraction: np.ndarray
    n_survivors: np.ndarray


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    variance: np.ndarray
    n_traj: int
    clicks: list
    postselected: PostselectedEnsemble | None
    backend: str

    def click_rows(self) -> list[list]:
        return [[i, t, d] for i, t, d in self.clicks]


def _moments(total, sq, count):
    """Mean, complex standard error and summed Re/Im variance per element."""
    n = np.maximum(count, 1).astype(float)[:, None]
    mean = total / n
    denom = np.maximum(count - 1, 1).astype(float)[:, None]
    var_re = np.maximum(sq[..., 0] - n * mean.real**2, 0.0) / denom
    var_im = np.maximum(sq[..., 1] - n * mean.imag**2, 0.0) / denom
    se = np.sqrt(var_re / n) + 1j * np.sqrt(var_im / n)
    return unvec(mean, 4), unvec(se, 4), unvec(var_re + var_im, 4)


def run_ensemble(
    cfg: DetectionConfig,
    h,
    rho0,
    t_final: float,
    n_traj: int,
    sample_every: int = 1,
    threads: int = 1,
    backend: str | None = None,
) -> EnsembleResult:
    """Simulate ``n_traj`` independent records and reduce them deterministically.

    Trajectory ``i`` draws from RNG stream ``i`` only, and partial sums are
    formed per fixed block of trajectories and combined in block order, so
    the result does not depend on ``threads``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    n_steps, times = _grid(t_final, cfg.dt, sample_every)
    kraus = build_kraus_set(cfg)
    s_ops, w_ops = branch_superoperators(kraus, step_propagator(h, cfg.dt))
    v0 = vec(_rho(rho0)).astype(complex)
    kernel = _backend.select(backend)

    ns = times.size
    total = np.zeros((ns, 16), dtype=complex)
    sq = np.zeros((ns, 16, 2))
    p_total = np.zeros((ns, 16), dtype=complex)
    p_sq = np.zeros((ns, 16, 2))
    p_count = np.zeros(ns, dtype=np.int64)
    clicks = []
    wave = _backend.WAVE_BLOCKS * _backend.BLOCK
    for start in range(0, n_traj, wave):
        count = min(wave, n_traj - start)
        part = kernel.run_wave(
            s_ops, w_ops, v0, start, count, n_steps, sample_every, cfg.seed, threads, _backend.BLOCK
        )
        for b in range(part["sum"].shape[0]):
            total += part["sum"][b]
            sq += part["sq"][b]
            p_total += part["post_sum"][b]
            p_sq += part["post_sq"][b]
            p_count += part["post_count"][b]
        n_clicks, c_step, c_det = part["click_count"], part["click_step"], part["click_det"]
        if np.any(n_clicks > c_step.shape[1]):
            raise RuntimeError("click buffer overflow")
        for i in range(count):
            for j in range(n_clicks[i]):
                clicks.append((start + i, (c_step[i, j] + 0.5) * cfg.dt, OUTCOMES[c_det[i, j]]))

    mean, se, var = _moments(total, sq, np.full(ns, n_traj))
    post = None
    if p_count[-1] > 0:
        p_mean, p_se, p_var = _moments(p_total, p_sq, p_count)
        post = PostselectedEnsemble(
            times=times,
            mean=p_mean,
            stderr=p_se,
            variance=p_var,
            survival_fraction=p_count / n_traj,
            n_survivors=p_count,
        )
    return EnsembleResult(
        times=times,
        mean=mean,
        stderr=se,
        variance=var,
        n_traj=n_traj,
        clicks=clicks,
        postselected=post,
        backend=kernel.NAME,
    )


def ensemble_average(cfg, h, rho0, t_final, n_traj, **kwargs) -> EnsembleResult:
    return run_ensemble(cfg, h, rho0, t_final, n_traj, **kwargs)


def postselect_average(cfg, h, rho0, t_final, n_traj, **kwargs) -> PostselectedEnsemble:
    result = run_ensemble(cfg, h, rho0, t_final, n_traj, **kwargs)
    if result.postselected is None:
        raise EmptyEnsemble(f"no trajectory out of {n_traj} survived without a click")
    return result.postselected


def ensemble_rows(times, mean, stderr, extra: dict | None = None) -> tuple[list[str], list[list]]:
    header = ["time"]
    for part in ("re", "im"):
        header += [f"{part}_{i}_{j}" for j in TT_LABELS for i in TT_LABELS]
    for part in ("se_re", "se_im"):
        header += [f"{part}_{i}_{j}" for j in TT_LABELS for i in TT_LABELS]
    extra = extra or {}
    header += list(extra)
    rows = []
    for k, t in enumerate(times):
        m, e = vec(mean[k]), vec(stderr[k])
        rows.append([t, *m.real, *m.imag, *e.real, *e.imag, *(c[k] for c in extra.values())])
    return header, rows


def write_ensemble_csv(path, result: EnsembleResult, extra: dict | None = None) -> None:
    write_csv(path, *ensemble_rows(result.times, result.mean, result.stderr, extra))


def write_click_log(path, result: EnsembleResult) -> None:
    write_csv(path, ["trajectory_id", "time_ns", "detector"], result.click_rows())

