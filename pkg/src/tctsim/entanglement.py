"""Logarithmic negativity of two-qubit states on the {gg, ge, eg, ee} basis."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .lindblad import DensityMatrix

CLAMP = 1e-10


def _matrix(rho) -> np.ndarray:
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if r.shape != (4, 4):
        raise DimensionMismatch(f"expected a 4x4 two-qubit state, got {r.shape}")
    return r


def partial_transpose(rho, subsystem: str = "b") -> np.ndarray:
    """Transpose the indices of one qubit (``'a'`` or ``'b'``)."""
    r = _matrix(rho).reshape(2, 2, 2, 2)  # (a, b, a', b')
    if subsystem == "b":
        r = r.transpose(0, 3, 2, 1)
    elif subsystem == "a":
        r = r.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"subsystem must be 'a' or 'b', got {subsystem!r}")
    return r.reshape(4, 4)


def log_negativity(rho, subsystem: str = "b") -> float:
    pt = partial_transpose(rho, subsystem)
    w = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    value = float(np.log2(np.sum(np.abs(w))))
    if abs(value) < CLAMP:  # roundoff around separable states
        return 0.0
    return value


def log_negativity_series(states) -> np.ndarray:
    return np.array([log_negativity(r) for r in states])
