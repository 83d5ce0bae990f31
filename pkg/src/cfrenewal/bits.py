"""Deterministic keyed bit streams.

All randomness in the package flows through one counter-based 64-bit mixer:
block j of stream t under master seed s is ``mix64(key(s, t) + (j+1)*GOLDEN)``.
A bit stream serves those blocks most-significant-bit first, so the stream
defines the binary expansion of one uniformly distributed real per
(master_seed, stream_index) pair.  Distinct stream indices give statistically
independent streams, and any bit or block can be regenerated from its
coordinates alone, which makes every consumer reproducible regardless of
scheduling.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

# numpy constants, kept as uint64 so arithmetic never promotes
_NP_GOLDEN = np.uint64(_GOLDEN)
_NP_MIX_A = np.uint64(_MIX_A)
_NP_MIX_B = np.uint64(_MIX_B)
_NP_30 = np.uint64(30)
_NP_27 = np.uint64(27)
_NP_31 = np.uint64(31)
_NP_11 = np.uint64(11)
_NP_ONE = np.uint64(1)

_U53_HALF = 0.5
_INV_2_53 = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def stream_key(master_seed: int, stream_index: int) -> int:
    """Per-stream key derived from the master seed by double mixing."""
    return mix64(mix64(master_seed) ^ ((stream_index + 1) * _GOLDEN & _MASK64))


def block64(key: int, index: int) -> int:
    """64-bit block at position ``index`` of the stream with the given key."""
    return mix64((key + (index + 1) * _GOLDEN) & _MASK64)


def uniform_from_block(block: int) -> float:
    """Map a 64-bit block to a uniform double in the open interval (0, 1)."""
    return ((block >> 11) + _U53_HALF) * _INV_2_53


def mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _NP_30)) * _NP_MIX_A
    z = (z ^ (z >> _NP_27)) * _NP_MIX_B
    return z ^ (z >> _NP_31)


def stream_keys_np(master_seed: int, stream_indices: np.ndarray) -> np.ndarray:
    """Vectorized :func:`stream_key` over an array of stream indices."""
    idx = stream_indices.astype(np.uint64)
    seed_mixed = np.uint64(mix64(master_seed))
    return mix64_np(seed_mixed ^ ((idx + _NP_ONE) * _NP_GOLDEN))


def blocks_np(keys: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Vectorized :func:`block64`; ``keys`` and ``indices`` broadcast together."""
    return mix64_np(keys + (indices.astype(np.uint64) + _NP_ONE) * _NP_GOLDEN)


def uniforms_np(keys: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Uniform doubles in (0, 1), one per (key, index) pair."""
    blocks = blocks_np(keys, indices)
    return ((blocks >> _NP_11).astype(np.float64) + _U53_HALF) * _INV_2_53


class BitSource:
    """Sequential view of one keyed bit stream.

    Bits are served most-significant-bit first from consecutive 64-bit
    blocks; ``position`` counts bits already emitted.
    """

    __slots__ = ("master_seed", "stream_index", "position", "_key", "_block", "_avail")

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or stream_index < 0:
            raise ValueError("master_seed and stream_index must be non-negative")
        self.master_seed = master_seed
        self.stream_index = stream_index
        self.position = 0
        self._key = stream_key(master_seed, stream_index)
        self._block = 0
        self._avail = 0

    def next_bit(self) -> int:
        if self._avail == 0:
            self._block = block64(self._key, self.position >> 6)
            self._avail = 64
        self._avail -= 1
        self.position += 1
        return (self._block >> self._avail) & 1

    def next_bits(self, count: int) -> int:
        """The next ``count`` bits packed into an integer, first bit highest."""
        out = 0
        for _ in range(count):
            out = (out << 1) | self.next_bit()
        return out

    def fork(self, stream_index: int) -> "BitSource":
        """Fresh source for another stream index under the same master seed."""
        return BitSource(self.master_seed, stream_index)
