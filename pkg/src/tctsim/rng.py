"""Counter-based uniform random numbers.

Every draw is a pure function of (seed, stream, counter): the stream is the
trajectory index and the counter the time-step index. Ensembles are therefore
reproducible and independent of how trajectories are scheduled across threads.
The mixing function is the SplitMix64 finalizer; the compiled kernels
implement the identical arithmetic.
"""
from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
TO_UNIT = 2.0**-53


def _u64(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=np.uint64))


def mix64(z) -> np.ndarray:
    z = _u64(z)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, stream) -> np.ndarray:
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    with np.errstate(over="ignore"):
        base = mix64(_u64(seed) + GAMMA)
        return mix64(base ^ ((_u64(stream) + np.uint64(1)) * GAMMA))


def uniform(key, counter) -> np.ndarray:
    """Doubles in [0, 1) for the given stream keys and counters (broadcast)."""
    with np.errstate(over="ignore"):
        z = mix64(_u64(key) + (_u64(counter) + np.uint64(1)) * GAMMA)
    return (z >> np.uint64(11)).astype(np.float64) * TO_UNIT


class CounterRNG:
    """Sequential view of one stream; ``random()`` advances the counter."""

    def __init__(self, seed: int, stream: int = 0, counter: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.counter = int(counter)
        self._key = stream_key(self.seed, self.stream)

    def at(self, counter: int) -> float:
        return float(uniform(self._key, counter)[0])

    def random(self) -> float:
        value = self.at(self.counter)
        self.counter += 1
        return value
