"""Single-transmon Hamiltonian in the Cooper-pair number basis.

Energies are in GHz with hbar = 1. The external flux is given in units of
the flux quantum.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .csvio import write_csv
from .errors import ConvergenceFailure, CutoffTooSmall, NumericalError

DEFAULT_CHARGE_CUTOFF = 20
MAX_LEVELS = 5
BOUNDARY_WEIGHT_TOL = 1e-8


@dataclass(frozen=True)
class TransmonSpec:
    ec: float
    ej_sigma: float
    flux: float = 0.0
    charge_cutoff: int = DEFAULT_CHARGE_CUTOFF

    def __post_init__(self):
        if not self.ec > 0:
            raise ValueError(f"ec must be positive, got {self.ec}")
        if not self.ej_sigma > 0:
            raise ValueError(f"ej_sigma must be positive, got {self.ej_sigma}")
        if int(self.charge_cutoff) != self.charge_cutoff or self.charge_cutoff < 10:
            raise ValueError(f"charge_cutoff must be an integer >= 10, got {self.charge_cutoff}")

    @property
    def ej_eff(self) -> float:
        return self.ej_sigma * np.cos(np.pi * self.flux)

    def with_flux(self, flux: float) -> "TransmonSpec":
        return TransmonSpec(self.ec, self.ej_sigma, flux, self.charge_cutoff)


@dataclass(frozen=True)
class TransmonEigensystem:
    """Lowest levels of one transmon.

    ``energies[i]`` is measured from the ground state. ``charge_elements[i]``
    is <i|n|i+1>, made real and non-negative by the gauge choice in
    :func:`diagonalize_transmon`.
    """

    energies: np.ndarray
    charge_elements: np.ndarray
    levels_kept: int
    spec: TransmonSpec | None = None

    @property
    def anharmonicity(self) -> float:
        e = self.energies
        return float((e[2] - e[1]) - (e[1] - e[0]))

    @property
    def ge_gap(self) -> float:
        return float(self.energies[1] - self.energies[0])


def _charges(spec: TransmonSpec) -> np.ndarray:
    nc = int(spec.charge_cutoff)
    return np.arange(-nc, nc + 1, dtype=float)


def build_charge_hamiltonian(spec: TransmonSpec) -> np.ndarray:
    """Dense charge-basis Hamiltonian, rows ordered n = -N_c .. N_c."""
    n = _charges(spec)
    dim = n.size
    h = np.zeros((dim, dim), dtype=complex)
    h[np.diag_indices(dim)] = 4.0 * spec.ec * n**2
    off = -0.5 * spec.ej_eff
    idx = np.arange(dim - 1)
    h[idx, idx + 1] = off
    h[idx + 1, idx] = off
    return h


def diagonalize_transmon(spec: TransmonSpec, levels: int = 3) -> TransmonEigensystem:
    """Lowest ``levels`` eigenpairs with energies referenced to E_0 = 0.

    Each eigenvector is sign-fixed so that <i|n|i+1> >= 0 for every kept i.
    """
    if not 1 <= levels <= MAX_LEVELS:
        raise ValueError(f"levels must be in [1, {MAX_LEVELS}], got {levels}")
    n = _charges(spec)
    diag = 4.0 * spec.ec * n**2
    off = np.full(n.size - 1, -0.5 * spec.ej_eff)
    try:
        w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, levels - 1))
    except LinAlgError as exc:
        raise ConvergenceFailure(f"tridiagonal eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise ConvergenceFailure("eigensolver returned non-finite energies")

    boundary = v[0, -1] ** 2 + v[-1, -1] ** 2
    if boundary > BOUNDARY_WEIGHT_TOL:
        raise CutoffTooSmall(
            f"level {levels - 1} has weight {boundary:.2e} on the boundary charge states; "
            f"increase charge_cutoff (now {spec.charge_cutoff})"
        )

    for i in range(levels - 1):
        if v[:, i] @ (n * v[:, i + 1]) < 0:
            v[:, i + 1] *= -1.0
    elements = np.array([v[:, i] @ (n * v[:, i + 1]) for i in range(levels - 1)])
    return TransmonEigensystem(
        energies=w - w[0],
        charge_elements=elements,
        levels_kept=levels,
        spec=spec,
    )


@dataclass(frozen=True)
class SweepRow:
    flux: float
    system: TransmonEigensystem


def flux_sweep_spectrum(
    spec_template: TransmonSpec,
    flux_grid: Sequence[float],
    levels: int = 3,
    threads: int = 1,
) -> list[SweepRow]:
    """Diagonalize the transmon at every flux in ``flux_grid`` (order kept)."""
    grid = [float(f) for f in flux_grid]
    if not grid:
        raise ValueError("flux grid is empty")
    if min(grid) < 0.0 or max(grid) > 1.0:
        raise ValueError("flux grid must lie within [0, 1]")

    def point(flux):
        try:
            return SweepRow(flux, diagonalize_transmon(spec_template.with_flux(flux), levels))
        except NumericalError as exc:
            exc.flux = flux
            exc.args = (f"{exc} [flux={flux}]",)
            raise

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(point, grid))
    return [point(f) for f in grid]


def sweep_columns(levels: int) -> list[str]:
    return ["flux"] + [f"E{i}" for i in range(levels)] + [f"n{i}{i + 1}" for i in range(levels - 1)]


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    levels = rows[0].system.levels_kept
    write_csv(
        path,
        sweep_columns(levels),
        ([row.flux, *row.system.energies, *row.system.charge_elements] for row in rows),
    )
