"""Second-order dispersive reduction of the transmon-cavity-transmon model.

Three tiers are produced: the full composite Hamiltonian (from
:mod:`tctsim.composite`), the dispersively transformed Hamiltonian on the same
space, and a 4x4 two-qubit Hamiltonian on {gg, ge, eg, ee} with the cavity
eliminated. Arrays indexed ``[x][i]`` use x = 0 for transmon a, 1 for b and
i for the lower level of the i -> i+1 transition.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .composite import LEVELS, CompositeModel, ModelFamily, ProductOps
from .csvio import fmt, write_csv
from .errors import NotDispersive, OffResonance

MIN_DETUNING = 0.5
MAX_ETA = 0.15
TT_LABELS = ("gg", "ge", "eg", "ee")


@dataclass(frozen=True)
class DispersiveParams:
    lam: np.ndarray
    beta: np.ndarray
    eta_disp: np.ndarray
    detuning: np.ndarray

    @property
    def lamb_shift(self) -> np.ndarray:
        """beta_i * lambda_i per transmon, the shift of level i+1."""
        return self.beta * self.lam

    @property
    def g_eg(self) -> float:
        lam, beta = self.lam, self.beta
        return 0.5 * (lam[0, 0] * beta[1, 0] + lam[1, 0] * beta[0, 0])


def compute_dispersive_params(model: CompositeModel) -> DispersiveParams:
    lam = np.zeros((2, 2))
    det = np.zeros((2, 2))
    for x, (system, zeta) in enumerate(
        ((model.transmon_a, model.coupling_a), (model.transmon_b, model.coupling_b))
    ):
        e = system.energies
        for i in range(2):
            lam[x, i] = zeta * system.charge_elements[i]
            det[x, i] = e[i + 1] - e[i] - model.cavity.frequency
    if np.any(np.abs(det) <= MIN_DETUNING):
        x, i = np.unravel_index(np.argmin(np.abs(det)), det.shape)
        raise NotDispersive(
            f"transmon {'ab'[x]} transition {i}->{i + 1} is only {det[x, i]:.4f} GHz from the cavity"
        )
    eta = lam / np.abs(det)
    if np.any(np.abs(eta) >= MAX_ETA):
        x, i = np.unravel_index(np.argmax(np.abs(eta)), eta.shape)
        raise NotDispersive(f"eta[{'ab'[x]}][{i}] = {eta[x, i]:.4f} exceeds {MAX_ETA}")
    return DispersiveParams(lam=lam, beta=lam / det, eta_disp=eta, detuning=det)


@dataclass(frozen=True)
class DispersiveHamiltonian:
    h0: np.ndarray
    h_ls: np.ndarray
    h_ac: np.ndarray
    h_c: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.h0 + self.h_ls + self.h_ac + self.h_c


def build_h_d_tct(model: CompositeModel, params: DispersiveParams) -> DispersiveHamiltonian:
    ops = ProductOps(model.cavity.fock_cutoff)
    kb = ops.ket_bra
    num = ops.a.T @ ops.a
    energies = (model.transmon_a.energies, model.transmon_b.energies)

    def on(x, op, cav=None):
        return ops.embed(op_a=op, op_c=cav) if x == 0 else ops.embed(op_c=cav, op_b=op)

    h0 = ops.embed(op_a=np.diag(energies[0])) + ops.embed(op_b=np.diag(energies[1]))
    h0 = h0 + model.cavity.frequency * ops.embed(op_c=num)

    h_ls = np.zeros_like(h0)
    h_ac = np.zeros_like(h0)
    for x in range(2):
        for i in range(LEVELS - 1):
            shift = params.lam[x, i] * params.beta[x, i]
            h_ls += shift * on(x, kb(i + 1, i + 1))
            h_ac += shift * on(x, kb(i + 1, i + 1) - kb(i, i), num)

    h_c = np.zeros_like(h0)
    for i in range(2):
        for k in range(2):
            strength = 0.5 * (params.lam[0, i] * params.beta[1, k] + params.lam[1, k] * params.beta[0, i])
            hop = ops.embed(op_a=kb(i, i + 1), op_b=kb(k + 1, k))
            h_c += strength * (hop + hop.T)

    return DispersiveHamiltonian(
        h0=h0.astype(complex), h_ls=h_ls.astype(complex), h_ac=h_ac.astype(complex), h_c=h_c.astype(complex)
    )


def two_qubit_hamiltonian(omega_a: float, omega_b: float, g: float) -> np.ndarray:
    """Diagonal qubit energies plus exchange on the {gg, ge, eg, ee} basis."""
    h = np.diag([0.0, omega_b, omega_a, omega_a + omega_b]).astype(complex)
    h[1, 2] = h[2, 1] = g
    return h


def interaction_hamiltonian(g: float) -> np.ndarray:
    return two_qubit_hamiltonian(0.0, 0.0, g)


@dataclass(frozen=True)
class EffectiveTTModel:
    level_energies: np.ndarray
    g_eg: float
    hamiltonian: np.ndarray

    @property
    def shifted_gaps(self) -> tuple[float, float]:
        e = self.level_energies
        return float(e[0, 1] - e[0, 0]), float(e[1, 1] - e[1, 0])

    @property
    def mean_gap(self) -> float:
        return 0.5 * sum(self.shifted_gaps)

    def in_megahertz(self, frame: str = "rotating") -> np.ndarray:
        """Hamiltonian in MHz for the reduced-model engines.

        ``rotating`` removes the common qubit frequency (exact for this
        excitation-conserving model), ``interaction`` keeps only the exchange
        term and ``lab`` returns the energies as they are.
        """
        if frame == "lab":
            h = self.hamiltonian
        elif frame == "rotating":
            wa, wb = self.shifted_gaps
            w = self.mean_gap
            h = two_qubit_hamiltonian(wa - w, wb - w, self.g_eg)
        elif frame == "interaction":
            h = interaction_hamiltonian(self.g_eg)
        else:
            raise ValueError(f"unknown frame {frame!r}")
        return 1e3 * h


def build_h_d_tt(params: DispersiveParams, energies) -> EffectiveTTModel:
    """4x4 effective model. ``energies[x]`` holds (E_g, E_e) of transmon x."""
    e = np.array([[energies[x][0], energies[x][1]] for x in range(2)], dtype=float)
    e[:, 1] += params.lamb_shift[:, 0]
    g = params.g_eg
    mismatch = abs((e[0, 1] - e[0, 0]) - (e[1, 1] - e[1, 0]))
    if mismatch > 10 * abs(g):
        raise OffResonance(f"Lamb-shifted gaps differ by {mismatch:.3e} GHz, more than 10 |G_eg| = {10 * abs(g):.3e}")
    if mismatch > 2 * abs(g):
        warnings.warn(f"Lamb-shifted gaps differ by {mismatch:.3e} GHz (> 2 |G_eg|)", stacklevel=2)
    h = np.diag([e[0, 0] + e[1, 0], e[0, 0] + e[1, 1], e[0, 1] + e[1, 0], e[0, 1] + e[1, 1]]).astype(complex)
    h[1, 2] = h[2, 1] = g
    return EffectiveTTModel(level_energies=e, g_eg=float(g), hamiltonian=h)


def effective_model(model: CompositeModel, params: DispersiveParams | None = None) -> EffectiveTTModel:
    params = compute_dispersive_params(model) if params is None else params
    return build_h_d_tt(params, (model.transmon_a.energies[:2], model.transmon_b.energies[:2]))


def shifted_gap_mismatch(family: ModelFamily, flux_b: float) -> float:
    model = family(flux_b)
    p = compute_dispersive_params(model)
    ea, eb = model.transmon_a.energies, model.transmon_b.energies
    return (ea[1] + p.lamb_shift[0, 0]) - (eb[1] + p.lamb_shift[1, 0])


def retune_flux_b(family: ModelFamily, bracket: tuple[float, float], xtol: float = 1e-13) -> float:
    """Flux of transmon b at which the Lamb-shifted g-e gaps coincide."""
    return brentq(lambda f: shifted_gap_mismatch(family, f), *bracket, xtol=xtol)


def summary_record(params: DispersiveParams, tt: EffectiveTTModel) -> dict:
    rec = {}
    for x, name in enumerate("ab"):
        for i in range(2):
            rec[f"lambda_{name}{i}{i + 1}"] = params.lam[x, i]
            rec[f"beta_{name}{i}"] = params.beta[x, i]
            rec[f"eta_{name}{i}"] = params.eta_disp[x, i]
        rec[f"shifted_gap_{name}"] = tt.shifted_gaps[x]
    rec["g_eg"] = params.g_eg
    return rec


def write_summary(record: dict, text_path, csv_path) -> None:
    with open(text_path, "w") as fh:
        for key, value in record.items():
            fh.write(f"{key} = {fmt(value)}\n")
    write_csv(csv_path, list(record), [list(record.values())])
