"""Lindblad master equations with a fixed-step RK4 integrator.

The integrator is unit-agnostic: callers pass H and rates in one frequency
unit and times in its reciprocal (GHz with ns for the circuit models, MHz with
us for the reduced two-qubit models).

Vectorization is column stacking, ``vec(A rho B) = (B^T kron A) vec(rho)``.
For small systems the RK4 one-step map of the linear generator is formed
explicitly and raised to the number of steps between samples; this is the same
iterate as stepping RK4 one dt at a time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .csvio import write_csv
from .errors import DimensionMismatch, InvariantViolation, UnknownLabel

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8
SUPEROP_MAX_DIM = 40


@dataclass
class DensityMatrix:
    data: np.ndarray
    basis_labels: list = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got {self.data.shape}")
        if not self.basis_labels:
            self.basis_labels = list(range(self.data.shape[0]))
        if len(self.basis_labels) != self.data.shape[0]:
            raise DimensionMismatch("label count does not match dimension")

    @classmethod
    def pure(cls, labels: Sequence, label) -> "DensityMatrix":
        labels = list(labels)
        if label not in labels:
            raise UnknownLabel(label)
        k = labels.index(label)
        rho = np.zeros((len(labels), len(labels)), dtype=complex)
        rho[k, k] = 1.0
        return cls(rho, labels)

    @classmethod
    def from_ket(cls, psi, labels: Sequence = ()) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), list(labels))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def index(self, label) -> int:
        try:
            return self.basis_labels.index(label)
        except ValueError:
            raise UnknownLabel(label) from None

    def element(self, i, j) -> complex:
        return complex(self.data[self.index(i), self.index(j)])

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))

    def violations(self) -> list[tuple[str, float]]:
        rho = self.data
        out = []
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if herm > HERMITIAN_TOL:
            out.append(("hermiticity", herm))
        tr = abs(complex(np.trace(rho)) - 1.0)
        if tr > TRACE_TOL:
            out.append(("trace", tr))
        lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if lo < -POSITIVITY_TOL:
            out.append(("positivity", lo))
        return out

    def validate(self, time=None) -> "DensityMatrix":
        bad = self.violations()
        if bad:
            which, value = bad[0]
            raise InvariantViolation(time, which, value)
        return self


@dataclass(frozen=True)
class DecayRates:
    """Relaxation and cavity decay rates in MHz."""

    gamma_a10: float = 0.0
    gamma_b10: float = 0.0
    gamma_a21: float = 0.0
    gamma_b21: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        for name in ("gamma_a10", "gamma_b10", "gamma_a21", "gamma_b21", "kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def _as_array(rho) -> np.ndarray:
    return rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def dissipator(op, rho) -> np.ndarray:
    """D[O] rho = O rho O^dag - {O^dag O, rho} / 2."""
    o = np.asarray(op, dtype=complex)
    r = _as_array(rho)
    if o.shape != r.shape:
        raise DimensionMismatch(f"operator {o.shape} vs state {r.shape}")
    od = o.conj().T
    odo = od @ o
    return o @ r @ od - 0.5 * (odo @ r + r @ odo)


def lindblad_rhs(h, jumps: Iterable[tuple[float, np.ndarray]], rho) -> np.ndarray:
    r = _as_array(rho)
    out = -1j * (h @ r - r @ h)
    for rate, op in jumps:
        if rate:
            out = out + rate * dissipator(op, r)
    return out


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    dim = int(round(np.sqrt(v.shape[-1]))) if dim is None else dim
    return v.reshape(v.shape[:-1] + (dim, dim), order="F")


def superoperator(h, jumps: Iterable[tuple[float, np.ndarray]]) -> np.ndarray:
    """Column-stacked generator of the Lindblad equation."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    eye = np.eye(n)
    sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for rate, op in jumps:
        if not rate:
            continue
        o = np.asarray(op, dtype=complex)
        odo = o.conj().T @ o
        sup += rate * (np.kron(o.conj(), o) - 0.5 * np.kron(eye, odo) - 0.5 * np.kron(odo.T, eye))
    return sup


def rk4_map(generator: np.ndarray, dt: float) -> np.ndarray:
    """One RK4 step of dv/dt = L v written as a matrix."""
    z = generator * dt
    eye = np.eye(z.shape[0], dtype=complex)
    z2 = z @ z
    return eye + z + z2 / 2 + z2 @ z / 6 + z2 @ z2 / 24


def step_counts(t_grid: Sequence[float], dt: float) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    gaps = np.diff(t)
    counts = np.rint(gaps / dt).astype(int)
    if np.any(counts < 0) or np.any(np.abs(counts * dt - gaps) > 1e-6 * dt):
        raise ValueError("t_grid spacings must be non-negative integer multiples of dt")
    return counts


def propagate_linear(generator: np.ndarray, v0: np.ndarray, t_grid, dt: float, rescale: bool = False):
    """RK4-propagate ``v0`` under a constant generator, sampling on ``t_grid``.

    With ``rescale`` each sample is divided by its trace (of the matrix it
    represents) before continuing, and the accumulated log-trace is returned
    alongside; this keeps decaying linear evolutions away from underflow.
    Returns (samples, log_scale).
    """
    counts = step_counts(t_grid, dt)
    step = rk4_map(generator, dt)
    dim = int(round(np.sqrt(v0.size)))
    diag = np.arange(dim) * (dim + 1)
    powers: dict[int, np.ndarray] = {}
    out = np.empty((counts.size + 1, v0.size), dtype=complex)
    logs = np.zeros(counts.size + 1)
    v = np.asarray(v0, dtype=complex).copy()
    out[0] = v
    log_scale = 0.0
    for k, m in enumerate(counts, start=1):
        if m not in powers:
            powers[m] = np.linalg.matrix_power(step, int(m))
        v = powers[m] @ v
        if rescale:
            tr = np.sum(v[diag]).real
            if not tr > 0:
                log_scale = -np.inf
            else:
                v = v / tr
                log_scale += np.log(tr)
        out[k] = v
        logs[k] = log_scale
    return out, logs


def _rk4_direct(h, jumps, rho0, t_grid, dt):
    counts = step_counts(t_grid, dt)
    jumps = [(rate, np.asarray(op, dtype=complex)) for rate, op in jumps if rate]
    r = np.asarray(rho0, dtype=complex).copy()
    out = [r.copy()]
    for m in counts:
        for _ in range(int(m)):
            k1 = lindblad_rhs(h, jumps, r)
            k2 = lindblad_rhs(h, jumps, r + 0.5 * dt * k1)
            k3 = lindblad_rhs(h, jumps, r + 0.5 * dt * k2)
            k4 = lindblad_rhs(h, jumps, r + dt * k3)
            r = r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(r.copy())
    return np.array(out)


def _split_direct(h, jumps, rho0, t_grid, dt):
    """Strang splitting: exact half-step unitaries around an RK4 dissipator step.

    Works in the eigenbasis of H, where the unitary part is an elementwise
    phase. Suited to weak damping under a stiff Hamiltonian, where plain RK4
    leaks positivity at any affordable dt.
    """
    counts = step_counts(t_grid, dt)
    e, v = np.linalg.eigh(h)
    vd = v.conj().T
    ops = [(rate, vd @ np.asarray(op, dtype=complex) @ v) for rate, op in jumps if rate]
    loss = sum((rate * o.conj().T @ o for rate, o in ops), np.zeros_like(h))

    def rhs(r):
        out = -0.5 * (loss @ r + r @ loss)
        for rate, o in ops:
            out += rate * (o @ r @ o.conj().T)
        return out

    half = np.exp(-0.5j * dt * (e[:, None] - e[None, :]))
    r = vd @ np.asarray(rho0, dtype=complex) @ v
    out = [np.asarray(rho0, dtype=complex).copy()]
    for m in counts:
        for _ in range(int(m)):
            r = half * r
            k1 = rhs(r)
            k2 = rhs(r + 0.5 * dt * k1)
            k3 = rhs(r + 0.5 * dt * k2)
            k4 = rhs(r + dt * k3)
            r = half * (r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        out.append(v @ r @ vd)
    return np.array(out)


@dataclass
class Evolution:
    times: np.ndarray
    states: np.ndarray
    basis_labels: list

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> DensityMatrix:
        return DensityMatrix(self.states[k], self.basis_labels)

    def element(self, i, j) -> np.ndarray:
        try:
            a, b = self.basis_labels.index(i), self.basis_labels.index(j)
        except ValueError:
            raise UnknownLabel((i, j)) from None
        return self.states[:, a, b]


def evolve_master(
    h,
    jumps: Iterable[tuple[float, np.ndarray]],
    rho0: DensityMatrix,
    t_grid,
    dt: float,
    rotate: tuple[float, np.ndarray] | None = None,
    check: bool = True,
    method: str = "rk4",
) -> Evolution:
    """Fixed-step RK4 solution of d rho/dt = -i[H, rho] + sum rate D[O] rho.

    ``rotate=(omega, N)`` integrates in the frame rotating at ``omega`` per
    excitation. That is exact when H commutes with N and every jump operator
    lowers N by one; populations and same-sector coherences are unchanged,
    other coherences pick up the frame phase.

    ``method='split'`` replaces plain RK4 by Strang splitting (exact unitary
    half-steps, RK4 on the dissipator), for stiff H with weak damping.
    """
    h = np.asarray(h, dtype=complex)
    if not isinstance(rho0, DensityMatrix):
        rho0 = DensityMatrix(rho0)
    if rho0.data.shape != h.shape:
        raise DimensionMismatch(f"H {h.shape} vs rho0 {rho0.data.shape}")
    jumps = list(jumps)
    if rotate is not None:
        omega, number = rotate
        number = np.asarray(number, dtype=complex)
        comm = np.max(np.abs(h @ number - number @ h))
        if comm > 1e-9 * max(1.0, np.max(np.abs(h))):
            raise ValueError("rotating frame requires H to commute with the excitation number")
        h = h - omega * number
    if check:
        rho0.validate(time=float(np.asarray(t_grid)[0]))

    n = h.shape[0]
    if method == "split":
        states = _split_direct(h, jumps, rho0.data, t_grid, dt)
    elif method != "rk4":
        raise ValueError(f"method must be 'rk4' or 'split', got {method!r}")
    elif n <= SUPEROP_MAX_DIM:
        vs, _ = propagate_linear(superoperator(h, jumps), vec(rho0.data), t_grid, dt)
        states = unvec(vs, n)
    else:
        states = _rk4_direct(h, jumps, rho0.data, t_grid, dt)

    times = np.asarray(t_grid, dtype=float)
    if check:
        for t, rho in zip(times, states):
            DensityMatrix(rho, rho0.basis_labels).validate(time=float(t))
    return Evolution(times=times, states=states, basis_labels=list(rho0.basis_labels))


def populations_and_coherences(evolution: Evolution, which: Sequence[tuple]) -> tuple[list[str], list[list]]:
    """Re and Im of <i|rho|j> per sample for each requested label pair."""
    header = ["time"]
    columns = []
    for i, j in which:
        col = evolution.element(i, j)
        header += [f"re_{i}_{j}", f"im_{i}_{j}"]
        columns += [col.real, col.imag]
    rows = [[t, *(c[k] for c in columns)] for k, t in enumerate(evolution.times)]
    return header, rows


def write_series_csv(path, evolution: Evolution, which: Sequence[tuple], extra: dict | None = None) -> None:
    header, rows = populations_and_coherences(evolution, which)
    if extra:
        header = header + list(extra)
        cols = list(extra.values())
        rows = [row + [c[k] for c in cols] for k, row in enumerate(rows)]
    write_csv(path, header, rows)
