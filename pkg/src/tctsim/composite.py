"""Transmon (x) cavity (x) transmon Hamiltonian and its avoided crossing.

Basis index of the product state |i_a, n, i_b> is
``i_a * (N_ph + 1) * 3 + n * 3 + i_b`` with three levels per transmon.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .charge_basis import TransmonEigensystem, TransmonSpec, diagonalize_transmon
from .errors import ConvergenceFailure, DimensionMismatch, NoMinimum

LEVELS = 3
LEVEL_NAMES = "gef"
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CavitySpec:
    frequency: float
    fock_cutoff: int = 3

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError(f"cavity frequency must be positive, got {self.frequency}")
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 2:
            raise ValueError(f"fock_cutoff must be an integer >= 2, got {self.fock_cutoff}")

    @property
    def dim(self) -> int:
        return int(self.fock_cutoff) + 1


def basis_labels(fock_cutoff: int) -> list[tuple[int, int, int]]:
    return [(ia, n, ib) for ia in range(LEVELS) for n in range(fock_cutoff + 1) for ib in range(LEVELS)]


def label_name(label: tuple[int, int, int]) -> str:
    ia, n, ib = label
    return f"{LEVEL_NAMES[ia]}a{n}{LEVEL_NAMES[ib]}b"


def basis_index(ia: int, n: int, ib: int, fock_cutoff: int) -> int:
    return ia * (fock_cutoff + 1) * LEVELS + n * LEVELS + ib


class ProductOps:
    """Embeds single-subsystem operators into the 3 x (N_ph+1) x 3 space."""

    def __init__(self, fock_cutoff: int):
        self.fock_cutoff = int(fock_cutoff)
        d = self.fock_cutoff + 1
        self.id_t = np.eye(LEVELS)
        self.id_c = np.eye(d)
        self.a = np.diag(np.sqrt(np.arange(1.0, d)), 1)
        self.dim = LEVELS * d * LEVELS

    def embed(self, op_a=None, op_c=None, op_b=None) -> np.ndarray:
        op_a = self.id_t if op_a is None else op_a
        op_c = self.id_c if op_c is None else op_c
        op_b = self.id_t if op_b is None else op_b
        return np.kron(np.kron(op_a, op_c), op_b)

    @staticmethod
    def ket_bra(i: int, j: int) -> np.ndarray:
        m = np.zeros((LEVELS, LEVELS))
        m[i, j] = 1.0
        return m

    def excitation_number(self) -> np.ndarray:
        levels = np.diag(np.arange(LEVELS, dtype=float))
        return self.embed(op_a=levels) + self.embed(op_c=self.a.T @ self.a) + self.embed(op_b=levels)


@dataclass(frozen=True)
class CompositeModel:
    transmon_a: TransmonEigensystem
    transmon_b: TransmonEigensystem
    cavity: CavitySpec
    coupling_a: float
    coupling_b: float
    hamiltonian: np.ndarray
    basis_labels: list = field(repr=False)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def index(self, ia: int, n: int, ib: int) -> int:
        return basis_index(ia, n, ib, self.cavity.fock_cutoff)

    def ops(self) -> ProductOps:
        return ProductOps(self.cavity.fock_cutoff)


def build_tct_hamiltonian(
    a: TransmonEigensystem,
    b: TransmonEigensystem,
    cav: CavitySpec,
    zeta_a: float,
    zeta_b: float,
) -> CompositeModel:
    """Excitation-conserving coupled Hamiltonian with g-e and e-f ladder couplings."""
    if a.levels_kept != LEVELS or b.levels_kept != LEVELS:
        raise DimensionMismatch(
            f"both transmons need {LEVELS} levels, got {a.levels_kept} and {b.levels_kept}"
        )
    ops = ProductOps(cav.fock_cutoff)
    a_op = ops.a
    h = ops.embed(op_a=np.diag(a.energies)) + ops.embed(op_b=np.diag(b.energies))
    h = h + cav.frequency * ops.embed(op_c=a_op.T @ a_op)
    for which, system, zeta in (("a", a, zeta_a), ("b", b, zeta_b)):
        for i in range(LEVELS - 1):
            lower = zeta * system.charge_elements[i] * ops.ket_bra(i, i + 1)
            if which == "a":
                term = ops.embed(op_a=lower, op_c=a_op.T)
            else:
                term = ops.embed(op_c=a_op.T, op_b=lower)
            h = h + term + term.T
    return CompositeModel(
        transmon_a=a,
        transmon_b=b,
        cavity=cav,
        coupling_a=float(zeta_a),
        coupling_b=float(zeta_b),
        hamiltonian=h.astype(complex),
        basis_labels=basis_labels(cav.fock_cutoff),
    )


@dataclass
class ModelFamily:
    """Builds composite models along a flux sweep of transmon b."""

    spec_a: TransmonSpec
    spec_b: TransmonSpec
    cavity: CavitySpec
    zeta_a: float
    zeta_b: float

    def __post_init__(self):
        self._a = diagonalize_transmon(self.spec_a, LEVELS)

    def transmon_a(self) -> TransmonEigensystem:
        return self._a

    def transmon_b(self, flux_b: float) -> TransmonEigensystem:
        return diagonalize_transmon(self.spec_b.with_flux(flux_b), LEVELS)

    def __call__(self, flux_b: float) -> CompositeModel:
        return build_tct_hamiltonian(self._a, self.transmon_b(flux_b), self.cavity, self.zeta_a, self.zeta_b)


def single_excitation_indices(model: CompositeModel) -> list[int]:
    return [k for k, (ia, n, ib) in enumerate(model.basis_labels) if ia + n + ib == 1]


def qubit_branch_gap(model: CompositeModel) -> float:
    """Gap between the two lowest dressed levels of the one-excitation block.

    With the cavity far above the qubits these are the two hybridized
    |e_a 0 g_b>, |g_a 0 e_b> branches.
    """
    idx = single_excitation_indices(model)
    block = model.hamiltonian[np.ix_(idx, idx)]
    try:
        e = np.linalg.eigvalsh(block)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return float(e[1] - e[0])


@dataclass(frozen=True)
class SpectrumRow:
    flux_b: float
    energies: np.ndarray
    labels: list


def dressed_spectrum(model: CompositeModel, zero_photon_only: bool = False) -> tuple[np.ndarray, list]:
    """Ascending eigenvalues with the dominant bare label of each eigenvector."""
    try:
        w, v = np.linalg.eigh(model.hamiltonian)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    dominant = np.argmax(np.abs(v) ** 2, axis=0)
    labels = [model.basis_labels[k] for k in dominant]
    if zero_photon_only:
        keep = [j for j, lab in enumerate(labels) if lab[1] == 0]
        w = w[keep]
        labels = [labels[j] for j in keep]
    return w, labels


def tct_spectrum_sweep(
    family: Callable[[float], CompositeModel],
    flux_grid: Sequence[float],
    zero_photon_only: bool = False,
    threads: int = 1,
) -> list[SpectrumRow]:
    grid = [float(f) for f in flux_grid]
    if not grid:
        raise ValueError("flux grid is empty")
    if min(grid) < 0.0 or max(grid) >= 0.5:
        raise ValueError("flux_b grid must lie within [0, 0.5)")

    def point(flux):
        w, labels = dressed_spectrum(family(flux), zero_photon_only)
        return SpectrumRow(flux, w, labels)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(point, grid))
    return [point(f) for f in grid]


def golden_section_minimize(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6):
    """Minimum of a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    a, b = float(lo), float(hi)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def find_avoided_crossing(
    family: Callable[[float], CompositeModel],
    bracket: tuple[float, float],
    tol: float = 1e-6,
) -> tuple[float, float]:
    """Flux of transmon b where the qubit-branch gap is smallest, and that gap."""
    lo, hi = bracket
    if not lo < hi:
        raise ValueError(f"invalid bracket {bracket}")

    def gap(flux):
        return qubit_branch_gap(family(flux))

    x, g = golden_section_minimize(gap, lo, hi, tol)
    # a monotonic gap drives the search onto an endpoint
    if min(x - lo, hi - x) < 2 * tol or g >= min(gap(lo), gap(hi)):
        raise NoMinimum(f"gap is monotonic over [{lo}, {hi}]")
    return x, g
