"""Numba kernel for the frame-level SIC sweeps.

One compiled loop covers the singleton, per-slot-discarding, and full-graph
decoders (mode 0/1/2).  It operates on flattened graph arrays and packed
uint64 payloads, and reproduces the pure-numpy decoders in decoders.py
bit-for-bit (enforced by tests); those remain the reference and the
fallback for payloads longer than 64 bits or when numba is unavailable.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco if not (args and callable(args[0])) else args[0]


MODE_SINGLETON = 0
MODE_MPR = 1
MODE_FG = 2

# kernel error codes
_OK = 0
_ERR_TOO_FEW_SURVIVORS = 1
_ERR_SINGLETON_MATCH = 2


@njit(cache=True)
def _sic_sweep(
    mode,
    residual,      # (N, 1+n0) int64, mutated
    word_bits,     # (M,) uint64 packed payloads
    words,         # (M, 1+n0) uint8
    cand_flat,     # concatenated candidate lists, int64
    cand_off,      # (N+1,) int64 offsets into cand_flat
    alive,         # (len(cand_flat),) bool, mutated
    slots_flat,    # concatenated slot lists per word, int64
    slots_off,     # (M+1,) int64
    pos_flat,      # positions of each word inside its slots' candidate lists
    resolved,      # (M,) int64 output buffer
    log_buf,       # (M, 3) int64 output buffer: (sweep, slot, degree)
):
    n_slots = residual.shape[0]
    n0 = residual.shape[1] - 1
    dirty = np.ones(n_slots, dtype=np.bool_)
    scratch = np.empty(len(cand_flat) + 1, dtype=np.int64)
    n_resolved = 0
    n_log = 0
    iterations = 0
    one = np.uint64(1)
    while True:
        any_dirty = False
        for s in range(n_slots):
            if dirty[s]:
                any_dirty = True
                break
        if not any_dirty:
            break
        iterations += 1
        for s in range(n_slots):
            if not dirty[s]:
                continue
            dirty[s] = False
            k = residual[s, 0]
            if k == 0:
                continue
            lo = cand_off[s]
            hi = cand_off[s + 1]
            if mode == MODE_SINGLETON:
                if k != 1:
                    continue
                res_bits = np.uint64(0)
                for j in range(n0):
                    if residual[s, 1 + j] == 1:
                        res_bits |= one << np.uint64(j)
                n_match = 0
                w = -1
                for p in range(lo, hi):
                    if alive[p] and word_bits[cand_flat[p]] == res_bits:
                        n_match += 1
                        w = cand_flat[p]
                if n_match != 1:
                    return n_resolved, n_log, iterations, _ERR_SINGLETON_MATCH, s
                resolved[n_resolved] = w
                n_resolved += 1
                log_buf[n_log, 0] = iterations
                log_buf[n_log, 1] = s
                log_buf[n_log, 2] = 1
                n_log += 1
                for j in range(slots_off[w], slots_off[w + 1]):
                    t = slots_flat[j]
                    for col in range(n0 + 1):
                        residual[t, col] -= words[w, col]
                    alive[cand_off[t] + pos_flat[j]] = False
                    dirty[t] = True
                dirty[s] = False
                continue
            # discarding decoders: build the forced-position masks
            one_mask = np.uint64(0)
            zero_mask = np.uint64(0)
            for j in range(n0):
                v = residual[s, 1 + j]
                if v == k:
                    one_mask |= one << np.uint64(j)
                elif v == 0:
                    zero_mask |= one << np.uint64(j)
            n_surv = 0
            n_disc = 0
            # survivors collected from the front, discards from the back
            for p in range(lo, hi):
                if not alive[p]:
                    continue
                b = word_bits[cand_flat[p]]
                if (b & one_mask) == one_mask and (b & zero_mask) == np.uint64(0):
                    scratch[n_surv] = p
                    n_surv += 1
                else:
                    n_disc += 1
                    scratch[len(scratch) - n_disc] = p
            if n_surv < k:
                return n_resolved, n_log, iterations, _ERR_TOO_FEW_SURVIVORS, s
            if mode == MODE_FG:
                for q in range(n_disc):
                    p = scratch[len(scratch) - 1 - q]
                    alive[p] = False
                    w = cand_flat[p]
                    for j in range(slots_off[w], slots_off[w + 1]):
                        t = slots_flat[j]
                        if t == s:
                            continue
                        pp = cand_off[t] + pos_flat[j]
                        if alive[pp]:
                            alive[pp] = False
                            dirty[t] = True
            else:
                for q in range(n_disc):
                    alive[scratch[len(scratch) - 1 - q]] = False
            if n_surv != k:
                continue
            log_buf[n_log, 0] = iterations
            log_buf[n_log, 1] = s
            log_buf[n_log, 2] = k
            n_log += 1
            for q in range(n_surv):
                p = scratch[q]
                w = cand_flat[p]
                resolved[n_resolved] = w
                n_resolved += 1
                alive[p] = False
                for j in range(slots_off[w], slots_off[w + 1]):
                    t = slots_flat[j]
                    for col in range(n0 + 1):
                        residual[t, col] -= words[w, col]
                    dirty[t] = True
                    if mode == MODE_FG and t != s:
                        pp = cand_off[t] + pos_flat[j]
                        if alive[pp]:
                            alive[pp] = False
            dirty[s] = False
    return n_resolved, n_log, iterations, _OK, -1
