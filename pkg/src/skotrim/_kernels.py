"""Compiled hot loops for the stochastic harness.

Lattice walks are simulated in integer units (space unit 1, strip height H)
and streamed through the exact reflection on the fly; turning points can be
recorded to rebuild the piecewise-linear path for cross-checks against the
exact path-level pipeline.  Randomness is a splitmix64 stream per replicate,
so every replicate is reproducible in isolation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, nogil=True)
def _pn_core(seed, H, cap, X_row, Y_row, rec_t, rec_v, record):
    """One first-return excursion conditioned to reach height H, streamed.

    Simulates the conditioned climb (harmonic tilt x -> x+1 with odds
    (x+1)/(2x)), then alternating boundary cycles of the exact lattice
    reflection on [0, H]:

      descent   from the moment the reflection sits at H until it reaches 0;
                up-steps arriving at H are absorbed and counted into X.
      race      from the zero until either the reflection climbs back to H
                (next cycle) or the walk itself returns to 0 (excursion over);
                down-steps absorbed at 0 are counted into Y.

    Writes the lattice X, Y chunks per cycle and optionally the turning
    points (step index, walk value) of the whole walk.

    Returns (n_cycles, truncated, n_turns, overflow, n_steps).
    """
    state = np.uint64(seed)
    bitbuf = np.uint64(0)
    nbits = 0

    w = 1  # walk value after the forced first step
    i = 1  # current step index
    d_prev = 1
    nt = 0
    overflow = False
    if record:
        rec_t[0] = 0
        rec_v[0] = 0
        nt = 1

    # conditioned climb from 1 to H
    while w < H:
        state = state + _GAMMA
        z = state
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
        u = float(z >> np.uint64(11)) * _INV53
        d = 1 if u * (2.0 * w) < (w + 1.0) else -1
        if d != d_prev:
            if record:
                if nt < rec_t.size:
                    rec_t[nt] = i
                    rec_v[nt] = w
                    nt += 1
                else:
                    overflow = True
                    record = False
        w += d
        i += 1
        d_prev = d

    lam = H
    fh = 0
    fh_s = 0
    fh_prev = 0
    n = 0
    truncated = False
    alive = True
    while alive:
        # descent phase: reflection from H down to its next zero
        while lam > 0:
            if nbits == 0:
                state = state + _GAMMA
                z = state
                z = (z ^ (z >> np.uint64(30))) * _MIX1
                z = (z ^ (z >> np.uint64(27))) * _MIX2
                bitbuf = z ^ (z >> np.uint64(31))
                nbits = 64
            up = (bitbuf & np.uint64(1)) == np.uint64(1)
            bitbuf >>= np.uint64(1)
            nbits -= 1
            if up:
                d = 1
                if lam == H:
                    fh += 1
                else:
                    lam += 1
            else:
                d = -1
                lam -= 1
            if d != d_prev:
                if record:
                    if nt < rec_t.size:
                        rec_t[nt] = i
                        rec_v[nt] = w
                        nt += 1
                    else:
                        overflow = True
                        record = False
            w += d
            i += 1
            d_prev = d
        X_row[n] = fh - fh_s
        Y_row[n] = fh_prev - fh_s
        fh_prev = fh
        n += 1
        if w == 0:
            break  # the return to 0 closed the whole excursion
        if n >= cap:
            truncated = True
            break
        # race phase: next climb to H versus the walk's return to 0
        fh_s = fh
        while True:
            if nbits == 0:
                state = state + _GAMMA
                z = state
                z = (z ^ (z >> np.uint64(30))) * _MIX1
                z = (z ^ (z >> np.uint64(27))) * _MIX2
                bitbuf = z ^ (z >> np.uint64(31))
                nbits = 64
            up = (bitbuf & np.uint64(1)) == np.uint64(1)
            bitbuf >>= np.uint64(1)
            nbits -= 1
            if up:
                d = 1
                lam += 1
            else:
                d = -1
                if lam == 0:
                    fh -= 1
                    fh_s = fh
                else:
                    lam -= 1
            if d != d_prev:
                if record:
                    if nt < rec_t.size:
                        rec_t[nt] = i
                        rec_v[nt] = w
                        nt += 1
                    else:
                        overflow = True
                        record = False
            w += d
            i += 1
            d_prev = d
            if up:
                if lam == H:
                    break
            elif w == 0:
                alive = False
                break

    if record:
        if nt < rec_t.size:
            rec_t[nt] = i
            rec_v[nt] = w
            nt += 1
        else:
            overflow = True
    return n, truncated, nt, overflow, i


@njit(cache=True, nogil=True)
def pn_batch(seeds, H, cap):
    """All replicates, statistics only.

    Returns (X, Y, N, truncated, steps) with X, Y as (reps, cap) lattice
    int64 arrays; row r is valid up to N[r].
    """
    reps = seeds.size
    X = np.zeros((reps, cap), np.int64)
    Y = np.zeros((reps, cap), np.int64)
    N = np.zeros(reps, np.int64)
    truncated = np.zeros(reps, np.uint8)
    steps = np.zeros(reps, np.int64)
    dummy_t = np.empty(1, np.int64)
    dummy_v = np.empty(1, np.int64)
    for r in range(reps):
        n, tr, _, _, st = _pn_core(
            seeds[r], H, cap, X[r], Y[r], dummy_t, dummy_v, False
        )
        N[r] = n
        truncated[r] = 1 if tr else 0
        steps[r] = st
    return X, Y, N, truncated, steps


@njit(cache=True, nogil=True)
def pn_with_path(seed, H, cap, rec_t, rec_v):
    """One replicate with turning points recorded into the given buffers."""
    X_row = np.zeros(cap, np.int64)
    Y_row = np.zeros(cap, np.int64)
    n, tr, nt, overflow, st = _pn_core(seed, H, cap, X_row, Y_row, rec_t, rec_v, True)
    return X_row, Y_row, n, tr, nt, overflow, st
