"""Liouvillian of the no-click two-qubit dynamics and its spectral decomposition.

The generator acts on column-stacked density matrices and is assembled as
``L = L_H + L_diss + L_jump``: coherent part, monitored damping and the
unmonitored decay channels. Eigenvalues are reported as decay rates,
``lambda = -eig(L)``, so modes evolve as ``exp(-lambda t)``.

In the interaction frame (exchange term only) the spectrum has closed forms in
``A = Gamma_a / 2``, ``B = Gamma_b / 2`` and ``G``, with an exceptional point
where ``(A - B)^2 = 4 G^2``.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment

from .dispersive import interaction_hamiltonian
from .errors import DimensionMismatch, EigFailure, NearDefective
from .postselection import EXCITED, LOWER, TT_LABELS, PostselectedModel

NEAR_DEFECTIVE = 1e8
DIM = 4


def vectorize(rho) -> np.ndarray:
    r = np.asarray(getattr(rho, "data", rho))
    if r.shape[-2:] != (DIM, DIM):
        raise DimensionMismatch(f"expected 4x4 matrices, got {r.shape}")
    return np.swapaxes(r, -1, -2).reshape(r.shape[:-2] + (DIM * DIM,))


def devectorize(v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != DIM * DIM:
        raise DimensionMismatch(f"expected 16-vectors, got {v.shape}")
    return np.swapaxes(v.reshape(v.shape[:-1] + (DIM, DIM)), -1, -2)


@dataclass(frozen=True)
class LiouvillianParams:
    gamma_a: float
    gamma_b: float
    eta_a: float
    eta_b: float
    g_eg: float

    @property
    def a(self) -> float:
        return 0.5 * self.gamma_a

    @property
    def b(self) -> float:
        return 0.5 * self.gamma_b

    @property
    def gamma_eta(self) -> tuple[float, float]:
        return ((1.0 - self.eta_a) * self.gamma_a, (1.0 - self.eta_b) * self.gamma_b)


@dataclass(frozen=True)
class LiouvillianMatrix:
    data: np.ndarray
    frame: str
    params: LiouvillianParams
    jump_part: np.ndarray = field(repr=False)

    def apply(self, rho) -> np.ndarray:
        return devectorize(self.data @ vectorize(rho))


def _exchange(h: np.ndarray) -> float:
    return float(np.real(h[1, 2]))


def build_liouvillian(model: PostselectedModel, frame: str = "lab") -> LiouvillianMatrix:
    if frame == "lab":
        h = model.hamiltonian
    elif frame == "interaction":
        h = interaction_hamiltonian(_exchange(model.hamiltonian))
    else:
        raise ValueError(f"frame must be 'lab' or 'interaction', got {frame!r}")
    eye = np.eye(DIM)
    l_h = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    l_diss = np.zeros((16, 16), dtype=complex)
    l_jump = np.zeros((16, 16), dtype=complex)
    jump = np.zeros((16, 16), dtype=complex)
    for g, eta, sig, n in zip(model.gammas, model.etas, LOWER, EXCITED):
        l_diss += -0.5 * g * eta * (np.kron(eye, n) + np.kron(n.T, eye))
        sandwich = (1.0 - eta) * g * np.kron(sig.conj(), sig)
        jump += sandwich
        l_jump += sandwich - 0.5 * (1.0 - eta) * g * (np.kron(eye, n) + np.kron(n.T, eye))
    params = LiouvillianParams(model.gamma_a, model.gamma_b, model.eta_a, model.eta_b, _exchange(model.hamiltonian))
    return LiouvillianMatrix(data=l_h + l_diss + l_jump, frame=frame, params=params, jump_part=jump)


def table_layout(lv: LiouvillianMatrix) -> np.ndarray:
    """Layout of the published interaction-frame table.

    That table lists the non-jump part with flipped sign (decay rates on the
    diagonal) next to positive jump entries, i.e. ``-(L - J) + J``.
    """
    return -(lv.data - lv.jump_part) + lv.jump_part


def explicit_table(p: LiouvillianParams) -> np.ndarray:
    """The published 16x16 table typed in entry by entry (1-based in comments)."""
    a, b, g = p.a, p.b, p.g_eg
    ga, gb = p.gamma_eta
    ig = 1j * g
    m = np.zeros((16, 16), dtype=complex)
    entries = {
        (1, 6): gb, (1, 11): ga,
        (2, 2): b, (2, 3): ig, (2, 12): ga,
        (3, 2): ig, (3, 3): a, (3, 8): gb,
        (4, 4): a + b,
        (5, 5): b, (5, 9): -ig, (5, 15): ga,
        (6, 6): 2 * b, (6, 7): ig, (6, 10): -ig, (6, 16): ga,
        (7, 6): ig, (7, 7): a + b, (7, 11): -ig,
        (8, 8): a + 2 * b, (8, 12): -ig,
        (9, 5): -ig, (9, 9): a, (9, 14): gb,
        (10, 6): -ig, (10, 10): a + b, (10, 11): ig,
        (11, 7): -ig, (11, 10): ig, (11, 11): 2 * a, (11, 16): gb,
        (12, 8): -ig, (12, 12): 2 * a + b,
        (13, 13): a + b,
        (14, 14): a + 2 * b, (14, 15): ig,
        (15, 14): ig, (15, 15): 2 * a + b,
        (16, 16): 2 * a + 2 * b,
    }
    for (r, c), value in entries.items():
        m[r - 1, c - 1] = value
    return m


@dataclass
class SpectralDecomposition:
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition_number: float
    coefficients: np.ndarray | None = None

    def biorthonormality_error(self) -> float:
        return float(np.max(np.abs(self.left @ self.right - np.eye(self.right.shape[1]))))

    def with_initial_state(self, rho0) -> "SpectralDecomposition":
        c = self.left @ vectorize(rho0)
        return SpectralDecomposition(self.eigenvalues, self.right, self.left, self.condition_number, c)

    def nearest(self, value: complex) -> int:
        return int(np.argmin(np.abs(self.eigenvalues - value)))


def eigendecompose(lv: LiouvillianMatrix | np.ndarray, rho0=None, warn: bool = True) -> SpectralDecomposition:
    """Full eigendecomposition with left vectors ``inv(R)``.

    Right eigenvectors have unit norm and their largest component real and
    positive. A :class:`NearDefective` warning is issued when the
    eigenvector matrix is badly conditioned.
    """
    data = lv.data if isinstance(lv, LiouvillianMatrix) else np.asarray(lv, dtype=complex)
    try:
        w, r = np.linalg.eig(data)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(r))):
            raise np.linalg.LinAlgError("non-finite eigenpairs")
        order = np.lexsort((np.round(w.imag, 12), np.round(-w.real, 12)))
        w, r = w[order], r[:, order]
        lead = r[np.argmax(np.abs(r), axis=0), np.arange(r.shape[1])]
        r = r / (lead / np.abs(lead)) / np.linalg.norm(r, axis=0)
        left = np.linalg.inv(r)
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from exc
    cond = float(np.linalg.cond(r))
    if warn and cond > NEAR_DEFECTIVE:
        warnings.warn(f"eigenvector matrix condition number {cond:.3e}; close to an exceptional point",
                      NearDefective, stacklevel=2)
    dec = SpectralDecomposition(eigenvalues=-w, right=r, left=left, condition_number=cond)
    return dec if rho0 is None else dec.with_initial_state(rho0)


def discriminant(gamma_a: float, gamma_b: float, g: float) -> float:
    a, b = 0.5 * gamma_a, 0.5 * gamma_b
    return (a - b) ** 2 - 4.0 * g**2


def analytic_eigenvalues(gamma_a: float, gamma_b: float, g: float) -> list[tuple[complex, int]]:
    """Closed-form interaction-frame spectrum as (lambda, multiplicity), lambda_1 .. lambda_9."""
    a, b = 0.5 * gamma_a, 0.5 * gamma_b
    s = a + b
    root = np.sqrt(complex(discriminant(gamma_a, gamma_b, g)))
    return [
        (0j, 1),
        (complex(s), 4),
        (complex(2 * s), 1),
        (s + root, 1),
        (s - root, 1),
        (1.5 * s + 0.5 * root, 2),
        (1.5 * s - 0.5 * root, 2),
        (0.5 * s + 0.5 * root, 2),
        (0.5 * s - 0.5 * root, 2),
    ]


def expand_multiset(pairs) -> np.ndarray:
    return np.array([lam for lam, mult in pairs for _ in range(mult)])


def match_spectra(numeric, reference) -> tuple[np.ndarray, np.ndarray]:
    """Optimal one-to-one pairing; returns (numeric, reference) reordered."""
    numeric, reference = np.asarray(numeric), np.asarray(reference)
    cost = np.abs(numeric[:, None] - reference[None, :])
    rows, cols = linear_sum_assignment(cost)
    return numeric[rows], reference[cols]


def ep_location(gamma_a: float, gamma_b: float) -> float:
    if gamma_a < 0 or gamma_b < 0:
        raise ValueError("rates must be non-negative")
    return abs(gamma_a - gamma_b) / 4.0


def oscillation_period(gamma_a: float, gamma_b: float, g: float) -> float:
    """Period of the normalized no-click populations above the EP.

    The one-excitation amplitudes rotate at ``Omega = sqrt(G^2 - (A-B)^2/4)``
    and populations repeat after ``pi / Omega``. Returns inf below the EP.
    """
    d = -discriminant(gamma_a, gamma_b, g)
    return np.pi / (0.5 * np.sqrt(d)) if d > 0 else np.inf


@dataclass
class ReconstructedEvolution:
    times: np.ndarray
    states: np.ndarray
    log_trace: np.ndarray
    method: str
    condition_number: float
    basis_labels: list = field(default_factory=lambda: list(TT_LABELS))


def _expm_path(generator: np.ndarray, v0: np.ndarray, times: np.ndarray):
    out = np.empty((times.size, v0.size), dtype=complex)
    logs = np.zeros(times.size)
    v = v0.astype(complex)
    t_prev = times[0]
    cache: dict[float, np.ndarray] = {}
    log_acc = 0.0
    for k, t in enumerate(times):
        step = round(float(t - t_prev), 12)
        if step:
            if step not in cache:
                cache[step] = expm(generator * step)
            v = cache[step] @ v
        tr = float(np.real(np.sum(devectorize(v).diagonal())))
        log_acc += np.log(tr)
        v = v / tr
        out[k] = v
        logs[k] = log_acc
        t_prev = t
    return out, logs


def reconstruct_evolution(
    decomp: SpectralDecomposition,
    t_grid,
    generator: np.ndarray | None = None,
    rho0=None,
    force: str | None = None,
) -> ReconstructedEvolution:
    """Sum the modes, devectorize and divide by the trace.

    Exponents are shifted by the slowest contributing rate so long times do
    not underflow; the trace normalization removes the shift. Near an
    exceptional point, or with ``force='expm'``, the state is propagated with
    matrix exponentials of ``generator`` instead.
    """
    times = np.asarray(t_grid, dtype=float)
    if rho0 is not None:
        decomp = decomp.with_initial_state(rho0)
    if decomp.coefficients is None:
        raise ValueError("decomposition carries no initial-state coefficients")
    use_expm = force == "expm" or (force is None and decomp.condition_number > NEAR_DEFECTIVE)
    if use_expm:
        if generator is None:
            generator = (decomp.right * -decomp.eigenvalues) @ decomp.left
        v0 = decomp.right @ decomp.coefficients
        vs, logs = _expm_path(np.asarray(generator), v0, times)
        return ReconstructedEvolution(times, devectorize(vs), logs, "expm", decomp.condition_number)

    c = decomp.coefficients
    lam = decomp.eigenvalues
    active = np.abs(c) > 1e-14 * max(1.0, np.max(np.abs(c)))
    shift = float(np.min(lam.real[active])) if np.any(active) else 0.0
    # roundoff-level coefficients on slower modes would overflow after the shift
    phases = np.exp(-np.outer(times, lam[active] - shift))
    vs = (phases * c[active]) @ decomp.right[:, active].T
    traces = np.real(np.sum(devectorize(vs).diagonal(axis1=-2, axis2=-1), axis=-1))
    states = devectorize(vs) / traces[:, None, None]
    logs = np.log(traces) - shift * times
    return ReconstructedEvolution(times, states, logs, "modes", decomp.condition_number)


@dataclass(frozen=True)
class SpectrumRow:
    g_eg: float
    eigenvalues: np.ndarray
    condition_number: float
    discriminant: float


def spectrum_sweep(base: PostselectedModel, g_values, frame: str = "interaction", threads: int = 1) -> list[SpectrumRow]:
    """Spectrum along G with every other parameter of ``base`` fixed."""

    def point(g):
        h = base.hamiltonian.copy()
        h[1, 2] = h[2, 1] = g
        model = PostselectedModel(h, base.gamma_a, base.gamma_b, base.eta_a, base.eta_b)
        dec = eigendecompose(build_liouvillian(model, frame), warn=False)
        return SpectrumRow(float(g), dec.eigenvalues, dec.condition_number, discriminant(base.gamma_a, base.gamma_b, g))

    values = [float(g) for g in g_values]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(point, values))
    return [point(g) for g in values]
