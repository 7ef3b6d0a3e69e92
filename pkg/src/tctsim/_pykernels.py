"""Vectorized numpy trajectory kernel, the reference for the compiled one."""
from __future__ import annotations

import numpy as np

from .rng import stream_key, uniform

NAME = "python"
MAX_CLICKS = 4
DIAG = np.array([0, 5, 10, 15])


def choose_outcomes(probs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Row-wise version of :func:`tctsim.trajectories.choose_outcome`."""
    cum = np.cumsum(probs, axis=1)
    hit = (x * cum[:, 3])[:, None] < cum
    positive = probs > 0.0
    last = np.where(positive.any(axis=1), 3 - np.argmax(positive[:, ::-1], axis=1), 0)
    return np.where(hit.any(axis=1), np.argmax(hit, axis=1), last)


def _allocate(nb, ns, count):
    return {
        "sum": np.zeros((nb, ns, 16), dtype=complex),
        "sq": np.zeros((nb, ns, 16, 2)),
        "post_sum": np.zeros((nb, ns, 16), dtype=complex),
        "post_sq": np.zeros((nb, ns, 16, 2)),
        "post_count": np.zeros((nb, ns), dtype=np.int64),
        "click_count": np.zeros(count, dtype=np.int64),
        "click_step": np.zeros((count, MAX_CLICKS), dtype=np.int64),
        "click_det": np.zeros((count, MAX_CLICKS), dtype=np.int64),
    }


def _accumulate(out, k, v, alive, starts):
    red = np.add.reduceat
    out["sum"][:, k] = red(v, starts, axis=0)
    out["sq"][:, k, :, 0] = red(v.real**2, starts, axis=0)
    out["sq"][:, k, :, 1] = red(v.imag**2, starts, axis=0)
    vp = np.where(alive[:, None], v, 0.0)
    out["post_sum"][:, k] = red(vp, starts, axis=0)
    out["post_sq"][:, k, :, 0] = red(vp.real**2, starts, axis=0)
    out["post_sq"][:, k, :, 1] = red(vp.imag**2, starts, axis=0)
    out["post_count"][:, k] = red(alive.astype(np.int64), starts)


def run_wave(s_ops, w_ops, v0, start, count, n_steps, sample_every, seed, threads=1, block=64):
    """Simulate trajectories ``start .. start+count-1``; ``threads`` is unused."""
    ns = n_steps // sample_every + 1
    starts = np.arange(0, count, block)
    out = _allocate(starts.size, ns, count)
    keys = stream_key(seed, np.arange(start, start + count, dtype=np.uint64))
    s_t = np.ascontiguousarray(np.transpose(s_ops, (0, 2, 1)))
    w_t = np.ascontiguousarray(w_ops.T)
    v = np.tile(np.asarray(v0, dtype=complex), (count, 1))
    alive = np.ones(count, dtype=bool)
    n_clicks = out["click_count"]
    for s in range(n_steps + 1):
        if s % sample_every == 0:
            _accumulate(out, s // sample_every, v, alive, starts)
        if s == n_steps:
            break
        probs = np.maximum((v @ w_t).real, 0.0)
        outcome = choose_outcomes(probs, uniform(keys, s))
        new = v @ s_t[0]
        for o in (1, 2, 3):
            idx = np.nonzero(outcome == o)[0]
            if idx.size == 0:
                continue
            new[idx] = v[idx] @ s_t[o]
            slot = n_clicks[idx]
            ok = slot < MAX_CLICKS
            out["click_step"][idx[ok], slot[ok]] = s
            out["click_det"][idx[ok], slot[ok]] = o
            n_clicks[idx] += 1
            alive[idx] = False
        v = new / new[:, DIAG].sum(axis=1).real[:, None]
    return out
