# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trajectory kernel.

Same contract and arithmetic as :mod:`tctsim._pykernels`: blocks of
trajectories are distributed over OpenMP threads, each block accumulated by one
thread in trajectory order. Branch maps are applied in sparse row form.
"""
import numpy as np

from cython.parallel import prange
from libc.stdint cimport int64_t, uint64_t

from .rng import stream_key

NAME = "cython"
MAX_CLICKS = 4
cdef int64_t C_MAX_CLICKS = 4

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double TO_UNIT = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, uint64_t counter) noexcept nogil:
    return <double>(mix64(key + (counter + 1) * GAMMA) >> 11) * TO_UNIT


cdef inline int choose(double* p, double x) noexcept nogil:
    cdef double total = p[0] + p[1] + p[2] + p[3]
    cdef double target = x * total
    cdef double cum = 0.0
    cdef int o, last = 0
    for o in range(4):
        if p[o] > 0.0:
            last = o
        cum = cum + p[o]
        if target < cum:
            return o
    return last


cdef void run_block(
    Py_ssize_t b, Py_ssize_t block, Py_ssize_t count, Py_ssize_t n_steps, Py_ssize_t every,
    const uint64_t[::1] keys, const double complex[::1] v0,
    const int64_t[:, ::1] sptr, const int64_t[::1] scol, const double complex[::1] sval,
    const int64_t[::1] wptr, const int64_t[::1] widx, const double complex[::1] wval,
    double complex[:, :, ::1] tot, double[:, :, :, ::1] sq,
    double complex[:, :, ::1] ptot, double[:, :, :, ::1] psq, int64_t[:, ::1] pcount,
    int64_t[::1] ncl, int64_t[:, ::1] cstep, int64_t[:, ::1] cdet,
) noexcept nogil:
    cdef double complex v[16]
    cdef double complex w[16]
    cdef double p[4]
    cdef double complex acc
    cdef double tr, re, im
    cdef Py_ssize_t t, s, i, j, k, r
    cdef int o, alive
    cdef int64_t nclick
    cdef Py_ssize_t t1 = min((b + 1) * block, count)
    for t in range(b * block, t1):
        for i in range(16):
            v[i] = v0[i]
        alive = 1
        nclick = 0
        for s in range(n_steps + 1):
            if s % every == 0:
                k = s // every
                for i in range(16):
                    re = v[i].real
                    im = v[i].imag
                    tot[b, k, i] = tot[b, k, i] + v[i]
                    sq[b, k, i, 0] += re * re
                    sq[b, k, i, 1] += im * im
                    if alive:
                        ptot[b, k, i] = ptot[b, k, i] + v[i]
                        psq[b, k, i, 0] += re * re
                        psq[b, k, i, 1] += im * im
                if alive:
                    pcount[b, k] += 1
            if s == n_steps:
                break
            for o in range(4):
                acc = 0.0
                for j in range(wptr[o], wptr[o + 1]):
                    acc = acc + wval[j] * v[widx[j]]
                p[o] = acc.real if acc.real > 0.0 else 0.0
            o = choose(p, uniform(keys[t], <uint64_t>s))
            for r in range(16):
                acc = 0.0
                for j in range(sptr[o, r], sptr[o, r + 1]):
                    acc = acc + sval[j] * v[scol[j]]
                w[r] = acc
            tr = (w[0] + w[5] + w[10] + w[15]).real
            for i in range(16):
                v[i] = w[i] / tr
            if o != 0:
                if nclick < C_MAX_CLICKS:
                    cstep[t, nclick] = s
                    cdet[t, nclick] = o
                nclick += 1
                alive = 0
        ncl[t] = nclick


def _sparse_rows(s_ops):
    """Row-pointer layout of the four 16x16 maps, pointers offset globally."""
    ptr = np.zeros((4, 17), dtype=np.int64)
    cols, vals = [], []
    n = 0
    for o in range(4):
        for r in range(16):
            nz = np.nonzero(s_ops[o, r])[0]
            ptr[o, r] = n
            cols.extend(nz)
            vals.extend(s_ops[o, r, nz])
            n += nz.size
        ptr[o, 16] = n
    return ptr, np.asarray(cols, dtype=np.int64), np.asarray(vals, dtype=complex)


def _sparse_vectors(w_ops):
    ptr = np.zeros(5, dtype=np.int64)
    idx, vals = [], []
    for o in range(4):
        nz = np.nonzero(w_ops[o])[0]
        idx.extend(nz)
        vals.extend(w_ops[o, nz])
        ptr[o + 1] = ptr[o] + nz.size
    return ptr, np.asarray(idx, dtype=np.int64), np.asarray(vals, dtype=complex)


def run_wave(s_ops, w_ops, v0, start, count, n_steps, sample_every, seed, threads=1, block=64):
    """Simulate trajectories ``start .. start+count-1`` on ``threads`` threads."""
    cdef Py_ssize_t ns = n_steps // sample_every + 1
    cdef Py_ssize_t nb = -(-count // block)
    out = {
        "sum": np.zeros((nb, ns, 16), dtype=complex),
        "sq": np.zeros((nb, ns, 16, 2)),
        "post_sum": np.zeros((nb, ns, 16), dtype=complex),
        "post_sq": np.zeros((nb, ns, 16, 2)),
        "post_count": np.zeros((nb, ns), dtype=np.int64),
        "click_count": np.zeros(count, dtype=np.int64),
        "click_step": np.zeros((count, MAX_CLICKS), dtype=np.int64),
        "click_det": np.zeros((count, MAX_CLICKS), dtype=np.int64),
    }
    sptr, scol, sval = _sparse_rows(np.asarray(s_ops, dtype=complex))
    wptr, widx, wval = _sparse_vectors(np.asarray(w_ops, dtype=complex))
    cdef const uint64_t[::1] keys = stream_key(seed, np.arange(start, start + count, dtype=np.uint64))
    cdef const double complex[::1] v0v = np.ascontiguousarray(v0, dtype=complex)
    cdef const int64_t[:, ::1] sptr_v = sptr
    cdef const int64_t[::1] scol_v = scol
    cdef const double complex[::1] sval_v = sval
    cdef const int64_t[::1] wptr_v = wptr
    cdef const int64_t[::1] widx_v = widx
    cdef const double complex[::1] wval_v = wval
    cdef double complex[:, :, ::1] tot = out["sum"]
    cdef double[:, :, :, ::1] sq = out["sq"]
    cdef double complex[:, :, ::1] ptot = out["post_sum"]
    cdef double[:, :, :, ::1] psq = out["post_sq"]
    cdef int64_t[:, ::1] pcount = out["post_count"]
    cdef int64_t[::1] ncl = out["click_count"]
    cdef int64_t[:, ::1] cstep = out["click_step"]
    cdef int64_t[:, ::1] cdet = out["click_det"]
    cdef Py_ssize_t b
    cdef Py_ssize_t blk = block, cnt = count, nst = n_steps, every = sample_every
    cdef int nthreads = max(1, int(threads))
    for b in prange(nb, nogil=True, num_threads=nthreads, schedule="dynamic"):
        run_block(b, blk, cnt, nst, every, keys, v0v, sptr_v, scol_v, sval_v,
                  wptr_v, widx_v, wval_v, tot, sq, ptot, psq, pcount, ncl, cstep, cdet)
    return out
