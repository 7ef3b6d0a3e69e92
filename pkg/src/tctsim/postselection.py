"""No-click postselected dynamics and the photon-counting stochastic master equation.

Conditioning on a detector record with no clicks replaces the monitored part
of each decay channel by the non-Hermitian damping ``-1/2 {n_x, rho}`` and a
term ``p_x rho`` that restores the trace, where ``n_x = |e><e|_x`` and
``p_x = Tr(n_x rho)``. The unmonitored fraction ``1 - eta_x`` of the decay
remains an ordinary Lindblad dissipator.

Dropping the ``p_x rho`` terms leaves a linear equation; its solution divided
by its trace is the postselected state, and the trace itself is the
probability that no click occurred. That linear path is the primary solver,
the nonlinear equation is integrated directly as a cross-check.

Units: H and rates in MHz (angular, per microsecond), times in microseconds,
SME steps in ns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MarkovViolation, NormUnderflow
from .lindblad import DensityMatrix, Evolution, propagate_linear, step_counts, superoperator, unvec, vec
from .rng import CounterRNG, stream_key, uniform

TT_LABELS = ["gg", "ge", "eg", "ee"]
SIGMA = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
LOWER = (np.kron(SIGMA, np.eye(2)), np.kron(np.eye(2), SIGMA))
EXCITED = tuple(op.conj().T @ op for op in LOWER)
MIN_NORM = 1e-12
MARKOV_LIMIT = 0.01


@dataclass(frozen=True)
class PostselectedModel:
    hamiltonian: np.ndarray
    gamma_a: float
    gamma_b: float
    eta_a: float = 0.0
    eta_b: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if h.shape != (4, 4):
            raise DimensionMismatch(f"two-qubit Hamiltonian must be 4x4, got {h.shape}")
        object.__setattr__(self, "hamiltonian", h)
        for name in ("eta_a", "eta_b"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.gamma_a < 0 or self.gamma_b < 0:
            raise ValueError("decay rates must be non-negative")

    @property
    def gammas(self) -> tuple[float, float]:
        return (self.gamma_a, self.gamma_b)

    @property
    def etas(self) -> tuple[float, float]:
        return (self.eta_a, self.eta_b)

    def with_efficiency(self, eta_a: float, eta_b: float | None = None) -> "PostselectedModel":
        eta_b = eta_a if eta_b is None else eta_b
        return PostselectedModel(self.hamiltonian, self.gamma_a, self.gamma_b, eta_a, eta_b)

    def unmonitored_jumps(self) -> list[tuple[float, np.ndarray]]:
        """Lindblad channels left after removing the monitored fraction."""
        return [((1.0 - e) * g, op) for g, e, op in zip(self.gammas, self.etas, LOWER)]

    def master_jumps(self) -> list[tuple[float, np.ndarray]]:
        """Full decay channels of the unconditioned master equation."""
        return [(g, op) for g, op in zip(self.gammas, LOWER)]

    def effective_hamiltonian(self) -> np.ndarray:
        """H - i/2 sum eta Gamma n_x, generating the monitored no-click damping."""
        damp = sum(e * g * n for g, e, n in zip(self.gammas, self.etas, EXCITED))
        return self.hamiltonian - 0.5j * damp


def _matrix(rho) -> np.ndarray:
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if r.shape[-2:] != (4, 4):
        raise DimensionMismatch(f"expected 4x4 states, got {r.shape}")
    return r


def _dissipators(model: PostselectedModel, r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    for rate, op in model.unmonitored_jumps():
        if rate:
            od = op.conj().T
            odo = od @ op
            out = out + rate * (op @ r @ od - 0.5 * (odo @ r + r @ odo))
    return out


def linear_rhs(model: PostselectedModel, rho) -> np.ndarray:
    """Unnormalized no-click generator; works on stacks of states."""
    r = _matrix(rho)
    heff = model.effective_hamiltonian()
    return -1j * (heff @ r - r @ heff.conj().T) + _dissipators(model, r)


def postselected_rhs(model: PostselectedModel, rho) -> np.ndarray:
    """Trace-preserving nonlinear postselected generator."""
    r = _matrix(rho)
    out = linear_rhs(model, r)
    for g, e, n in zip(model.gammas, model.etas, EXCITED):
        if e * g:
            p = np.trace(n @ r, axis1=-2, axis2=-1).real
            out = out + e * g * p[..., None, None] * r
    return out


def linear_superoperator(model: PostselectedModel) -> np.ndarray:
    """Column-stacked matrix of :func:`linear_rhs`."""
    heff = model.effective_hamiltonian()
    eye = np.eye(4)
    sup = -1j * (np.kron(eye, heff) - np.kron(heff.conj(), eye))
    return sup + superoperator(np.zeros((4, 4)), model.unmonitored_jumps())


@dataclass
class PostselectedEvolution(Evolution):
    log_survival: np.ndarray = None
    method: str = "linear"

    @property
    def survival_weight(self) -> np.ndarray:
        """Probability that no click occurred up to each sample time."""
        return np.exp(self.log_survival)


def evolve_postselected_linear(
    model: PostselectedModel, rho0, t_grid, dt: float = 1e-3, min_norm: float = MIN_NORM
) -> PostselectedEvolution:
    """Linear no-click evolution, renormalized at each sample.

    The state is rescaled to unit trace at every sample so long runs never
    underflow; ``min_norm`` bounds the trace lost between two samples.
    """
    r0 = _matrix(rho0)
    vs, logs = propagate_linear(linear_superoperator(model), vec(r0), t_grid, dt, rescale=True)
    steps = np.diff(logs)
    if np.any(~np.isfinite(logs)) or (steps.size and steps.min() < np.log(min_norm)):
        k = int(np.argmax(~np.isfinite(logs[1:]) | (steps < np.log(min_norm)))) + 1
        raise NormUnderflow(f"no-click weight fell below {min_norm:g} within one sample before t = {t_grid[k]}")
    return PostselectedEvolution(
        times=np.asarray(t_grid, dtype=float),
        states=unvec(vs, 4),
        basis_labels=list(TT_LABELS),
        log_survival=logs,
        method="linear",
    )


def _rk4(f, r, dt):
    k1 = f(r)
    k2 = f(r + 0.5 * dt * k1)
    k3 = f(r + 0.5 * dt * k2)
    k4 = f(r + dt * k3)
    return r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve_postselected_nonlinear(model: PostselectedModel, rho0, t_grid, dt: float = 1e-3) -> PostselectedEvolution:
    """Direct RK4 integration of the nonlinear postselected equation.

    The survival weight follows from d ln w / dt = -sum eta Gamma p_x,
    integrated with the trapezoidal rule on the RK4 steps.
    """
    counts = step_counts(t_grid, dt)
    r = _matrix(rho0).copy()
    rates = [e * g for g, e in zip(model.gammas, model.etas)]

    def loss(x):
        return sum(k * np.trace(n @ x).real for k, n in zip(rates, EXCITED))

    states = [r.copy()]
    logs = [0.0]
    log_w = 0.0
    for m in counts:
        for _ in range(int(m)):
            before = loss(r)
            r = _rk4(lambda x: postselected_rhs(model, x), r, dt)
            log_w -= 0.5 * dt * (before + loss(r))
        states.append(r.copy())
        logs.append(log_w)
    return PostselectedEvolution(
        times=np.asarray(t_grid, dtype=float),
        states=np.array(states),
        basis_labels=list(TT_LABELS),
        log_survival=np.array(logs),
        method="nonlinear",
    )


def unmonitored_rhs(model: PostselectedModel, rho) -> np.ndarray:
    """Unconditioned Lindblad generator (every eta set to zero)."""
    return linear_rhs(model.with_efficiency(0.0), rho)


def jump_map(rho: np.ndarray, x: int) -> np.ndarray:
    """State after a click of detector x: sigma rho sigma^dag / <n_x>."""
    op = LOWER[x]
    out = op @ rho @ op.conj().T
    p = np.trace(out, axis1=-2, axis2=-1).real
    return out / p[..., None, None]


def _check_markov(model: PostselectedModel, dt_ns: float) -> float:
    dt = dt_ns * 1e-3
    if max(model.gammas) * dt >= MARKOV_LIMIT:
        raise MarkovViolation(f"Gamma dt = {max(model.gammas) * dt:.3g} is not small against 1")
    return dt


@dataclass
class SMERecord:
    times: np.ndarray
    states: np.ndarray
    clicks: list


def evolve_sme(
    model: PostselectedModel, rho0, t_final: float, rng: CounterRNG, dt_ns: float = 1.0, sample_every: int = 1
) -> SMERecord:
    """One photon-counting record of the stochastic master equation.

    Each step draws dN_x ~ Bernoulli(eta_x Gamma_x <n_x> dt) for a then b,
    applies the click reset of every detector that fired and then advances
    the deterministic part with RK4 over dt.
    """
    dt = _check_markov(model, dt_ns)
    n_steps = int(round(t_final / dt))
    r = _matrix(rho0).copy()
    states = [r.copy()]
    clicks = []
    for s in range(n_steps):
        fired = []
        for x in range(2):
            rate = model.etas[x] * model.gammas[x]
            p = rate * np.trace(EXCITED[x] @ r).real * dt
            if rng.random() < p:
                fired.append(x)
        for x in fired:
            r = jump_map(r, x)
        if fired:
            clicks.append(((s + 0.5) * dt_ns, "both" if len(fired) == 2 else "ab"[fired[0]]))
        r = _rk4(lambda y: postselected_rhs(model, y), r, dt)
        if (s + 1) % sample_every == 0:
            states.append(r.copy())
    times = np.arange(len(states)) * sample_every * dt
    return SMERecord(times=times, states=np.array(states), clicks=clicks)


@dataclass
class SMEEnsemble:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_traj: int
    n_clicks: int


def _row_major(sup: np.ndarray) -> np.ndarray:
    """Re-index a column-stacked superoperator to act on row-major vectors."""
    perm = np.arange(16).reshape(4, 4).T.ravel()
    return sup[np.ix_(perm, perm)]


def sme_ensemble(
    model: PostselectedModel,
    rho0,
    t_final: float,
    n_traj: int,
    seed: int,
    dt_ns: float = 1.0,
    sample_every: int = 1,
) -> SMEEnsemble:
    """Batched SME records; record i uses RNG stream i as :func:`evolve_sme` would."""
    dt = _check_markov(model, dt_ns)
    n_steps = int(round(t_final / dt))
    keys = stream_key(seed, np.arange(n_traj, dtype=np.uint64))
    r = np.broadcast_to(_matrix(rho0), (n_traj, 4, 4)).copy()
    total, sq = [r.sum(0)], [(r.real**2).sum(0) + 1j * (r.imag**2).sum(0)]
    n_clicks = 0
    # the linear part as one 16x16 product on row-major vectors of the stack
    sup_t = _row_major(linear_superoperator(model)).T
    gain = np.array([e * g for g, e in zip(model.gammas, model.etas)]) @ np.array([np.diag(n).real for n in EXCITED])

    def rhs(y):
        flat = y.reshape(len(y), 16)
        p = np.einsum("nii,i->n", y, gain)
        return (flat @ sup_t + p[:, None] * flat).reshape(y.shape)

    for s in range(n_steps):
        fired = []
        for x in range(2):
            rate = model.etas[x] * model.gammas[x]
            p = rate * np.trace(EXCITED[x] @ r, axis1=1, axis2=2).real * dt
            fired.append(uniform(keys, 2 * s + x) < p)
        for x in range(2):
            idx = np.nonzero(fired[x])[0]
            if idx.size:
                r[idx] = jump_map(r[idx], x)
        n_clicks += int(np.count_nonzero(fired[0] | fired[1]))
        r = _rk4(rhs, r, dt)
        if (s + 1) % sample_every == 0:
            total.append(r.sum(0))
            sq.append((r.real**2).sum(0) + 1j * (r.imag**2).sum(0))
    total, sq = np.array(total), np.array(sq)
    mean = total / n_traj
    denom = max(n_traj - 1, 1)
    var_re = np.maximum(sq.real - n_traj * mean.real**2, 0.0) / denom
    var_im = np.maximum(sq.imag - n_traj * mean.imag**2, 0.0) / denom
    se = np.sqrt(var_re / n_traj) + 1j * np.sqrt(var_im / n_traj)
    times = np.arange(mean.shape[0]) * sample_every * dt
    return SMEEnsemble(times=times, mean=mean, stderr=se, n_traj=n_traj, n_clicks=n_clicks)
