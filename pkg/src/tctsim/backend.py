"""Selection of the trajectory kernel implementation.

The compiled extension is used when it imports; otherwise the vectorized
numpy version. ``TCTSIM_BACKEND`` (``auto``, ``cython`` or ``python``) overrides
the choice. Both kernels draw identical random numbers and sum fixed blocks of
``BLOCK`` trajectories in index order.
"""
from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

ENV_VAR = "TCTSIM_BACKEND"
BLOCK = 64
WAVE_BLOCKS = 16


def available() -> list[str]:
    return ["cython", "python"] if _kernels is not None else ["python"]


def select(name: str | None = None):
    name = (name or os.environ.get(ENV_VAR) or "auto").lower()
    if name == "auto":
        return _kernels if _kernels is not None else _pykernels
    if name == "cython":
        if _kernels is None:
            raise ImportError("the compiled kernel extension is not built")
        return _kernels
    if name == "python":
        return _pykernels
    raise ValueError(f"unknown backend {name!r}; expected auto, cython or python")


DEFAULT = select().NAME
