"""Sequential samplers for digit and orbit statistics at Monte Carlo scale.

Certified bit-by-bit extraction costs O(k) big-integer work for the k-th
digit, which is fine for exactness checks but not for 10^5 trials at horizon
10^6.  These samplers instead draw each digit (or each visit of the
Lasota-Yorke orbit to (1/2, 1]) from its exact conditional distribution
given the history, so the sampled process has the same law as the certified
one up to double-precision rounding of the conditional parameters.

Continued-fraction digits: conditioned on the first k digits, a uniformly
distributed number maps under k Gauss steps to a point with density
(1+r)/(1+r t)^2 on [0, 1], where r is the ratio of consecutive continuant
denominators.  Hence P(a >= m | r) = (1+r)/(m+r), a digit is drawn by
inverting that CDF with one uniform, and r updates by r' = 1/(a + r).  The
chain r' = 1/(a + r) is uniformly contracting, so rounding never
accumulates.

Lasota-Yorke: conditioned on the branch word, the current position has
density (1+s)/(1+s x)^2 on [0, 1]; the left branch has probability
(1+s)/(2+s) and maps s -> s+1, the right branch maps s -> s/(s+2).  Left
runs telescope, P(run >= j | s) = (1+s)/(1+s+j), so whole laminar phases are
sampled from a single uniform.

One 64-bit block of the trial's keyed bit stream is consumed per draw, so
results are a pure function of (master_seed, stream_index) and independent
of scheduling.
"""

from __future__ import annotations

from math import exp, log
from typing import Iterator, Sequence

import numpy as np

from .bits import stream_key, stream_keys_np, uniform_from_block, block64, uniforms_np

_CHUNK = 1 << 14


def sampled_digits(master_seed: int, stream_index: int) -> Iterator[int]:
    """Endless digit iterator for one trial, one uniform per digit."""
    key = stream_key(master_seed, stream_index)
    r = 0.0
    j = 0
    while True:
        v = uniform_from_block(block64(key, j))
        j += 1
        a = int((1.0 + r * (1.0 - v)) / v)
        r = 1.0 / (a + r)
        yield a


def orbit_checkpoints(
    master_seed: int,
    stream_index: int,
    checkpoints: Sequence[int],
) -> list[dict]:
    """Scan one sampled digit orbit, reporting at fixed digit counts.

    Returns one record per checkpoint k: digit sum S_k, trimmed sum
    (S_k minus the largest digit so far), largest digit, and the running
    geometric mean of the first k digits.
    """
    cps = sorted(set(int(c) for c in checkpoints))
    if not cps or cps[0] < 1:
        raise ValueError("checkpoints must be positive")
    total = cps[-1]
    key = np.uint64(stream_key(master_seed, stream_index))
    r = 0.0
    s = 0
    log_sum = 0.0
    max_digit = 0
    k = 0
    out = []
    next_cp = iter(cps)
    cp = next(next_cp)
    while k < total:
        m = min(_CHUNK, total - k)
        vs = uniforms_np(key, np.arange(k, k + m, dtype=np.uint64))
        for v in vs.tolist():
            a = int((1.0 + r * (1.0 - v)) / v)
            r = 1.0 / (a + r)
            s += a
            log_sum += log(a)
            if a > max_digit:
                max_digit = a
            k += 1
            if k == cp:
                out.append(
                    {
                        "k": k,
                        "S": s,
                        "trimmed": s - max_digit,
                        "max_digit": max_digit,
                        "geometric_mean": exp(log_sum / k),
                    }
                )
                cp = next(next_cp, None)
        if cp is None:
            break
    return out


def digit_sum_crossings(
    master_seed: int,
    trial_indices: np.ndarray,
    horizons: Sequence[int],
) -> np.ndarray:
    """X_n = max{S_k <= n} for every trial and every horizon, vectorized.

    Each trial draws digits until its sum passes the largest horizon; the
    value recorded at a horizon is the last sum not exceeding it.  Returns
    an int64 array of shape (trials, len(horizons)); horizons must be
    strictly increasing.
    """
    hz = np.asarray(horizons, dtype=np.int64)
    if hz.ndim != 1 or len(hz) == 0 or np.any(np.diff(hz) <= 0) or hz[0] < 1:
        raise ValueError("horizons must be strictly increasing positive integers")
    n_h = len(hz)
    trials = np.asarray(trial_indices, dtype=np.uint64)
    n_t = len(trials)
    x_out = np.zeros((n_t, n_h), dtype=np.int64)

    # retired trials point one past the last horizon and can never cross it
    hz_ext = np.concatenate((hz, [np.iinfo(np.int64).max]))

    idx = np.arange(n_t)
    keys = stream_keys_np(master_seed, trials)
    r = np.zeros(n_t, dtype=np.float64)
    s = np.zeros(n_t, dtype=np.int64)
    counter = np.zeros(n_t, dtype=np.uint64)
    next_h = np.zeros(n_t, dtype=np.int64)

    while len(idx):
        v = uniforms_np(keys, counter)
        a = np.floor((1.0 + r * (1.0 - v)) / v).astype(np.int64)
        s_new = s + a
        crossed = s_new > hz_ext[next_h]
        while np.any(crossed):
            w = np.nonzero(crossed)[0]
            x_out[idx[w], next_h[w]] = s[w]
            next_h[w] += 1
            crossed[:] = False
            crossed[w] = s_new[w] > hz_ext[next_h[w]]
        r = 1.0 / (a + r)
        s = s_new
        counter += np.uint64(1)
        live = next_h < n_h
        n_live = int(np.count_nonzero(live))
        if n_live == 0:
            break
        if n_live < 0.7 * len(idx):
            idx = idx[live]
            keys = keys[live]
            r = r[live]
            s = s[live]
            counter = counter[live]
            next_h = next_h[live]
    return x_out


def digit_sums_at(
    master_seed: int,
    trial_indices: np.ndarray,
    checkpoints: Sequence[int],
) -> np.ndarray:
    """Digit sums S_k at fixed digit counts k, vectorized over trials.

    Returns an int64 array of shape (trials, len(checkpoints)); checkpoints
    must be strictly increasing.
    """
    cps = np.asarray(checkpoints, dtype=np.int64)
    if cps.ndim != 1 or len(cps) == 0 or np.any(np.diff(cps) <= 0) or cps[0] < 1:
        raise ValueError("checkpoints must be strictly increasing positive integers")
    trials = np.asarray(trial_indices, dtype=np.uint64)
    n_t = len(trials)
    keys = stream_keys_np(master_seed, trials)
    r = np.zeros(n_t, dtype=np.float64)
    s = np.zeros(n_t, dtype=np.int64)
    out = np.zeros((n_t, len(cps)), dtype=np.int64)
    k = 0
    for j, cp in enumerate(cps.tolist()):
        while k < cp:
            v = uniforms_np(keys, np.full(n_t, k, dtype=np.uint64))
            a = np.floor((1.0 + r * (1.0 - v)) / v).astype(np.int64)
            s += a
            r = 1.0 / (a + r)
            k += 1
        out[:, j] = s
    return out


def ly_last_visits(
    master_seed: int,
    trial_indices: np.ndarray,
    horizons: Sequence[int],
) -> np.ndarray:
    """Time of the last visit to (1/2, 1] within [0, n] for the Lasota-Yorke map.

    Vectorized over trials; one uniform per laminar run.  Returns an int64
    array of shape (trials, len(horizons)) holding the last visit time not
    exceeding each horizon, or -1 when the orbit has not visited by then.
    """
    hz = np.asarray(horizons, dtype=np.int64)
    if hz.ndim != 1 or len(hz) == 0 or np.any(np.diff(hz) <= 0) or hz[0] < 1:
        raise ValueError("horizons must be strictly increasing positive integers")
    n_max = int(hz[-1])
    trials = np.asarray(trial_indices, dtype=np.uint64)
    n_t = len(trials)
    last = np.full((n_t, len(hz)), -1, dtype=np.int64)

    idx = np.arange(n_t)
    keys = stream_keys_np(master_seed, trials)
    shape = np.zeros(n_t, dtype=np.float64)
    t = np.zeros(n_t, dtype=np.int64)
    counter = np.zeros(n_t, dtype=np.uint64)

    while len(idx):
        v = uniforms_np(keys, counter)
        run = np.floor((1.0 + shape) * (1.0 - v) / v).astype(np.int64)
        hit = t + run
        for j, h in enumerate(hz.tolist()):
            # hit >= 0 guards retired trials whose clocks keep advancing
            mask = (hit >= 0) & (hit <= h)
            if np.any(mask):
                last[idx[mask], j] = hit[mask]
        after = shape + run.astype(np.float64)
        shape = after / (after + 2.0)
        t = hit + 1
        counter += np.uint64(1)
        live = hit <= n_max
        n_live = int(np.count_nonzero(live))
        if n_live == 0:
            break
        if n_live < 0.7 * len(idx):
            idx = idx[live]
            keys = keys[live]
            shape = shape[live]
            t = t[live]
            counter = counter[live]
    return last
