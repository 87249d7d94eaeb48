"""Deterministic random streams: SplitMix64 plus Box-Muller normals.

Every stochastic element in the pipeline (synthetic noise, the baseline
projection matrix, fixture attributes) draws from these streams, so equal
seeds give byte-equal results on any platform with IEEE-754 doubles.

Stream layout is fixed:
  - uniform i is built from the top 53 bits of SplitMix64 output i
  - normals come in Box-Muller pairs: outputs (2j, 2j+1) give
    z[2j] = r*cos(2*pi*u2) and z[2j+1] = r*sin(2*pi*u2) with
    r = sqrt(-2*ln(u1)), u1 = ((x >> 11) + 1) * 2**-53 (never zero),
    u2 = (y >> 11) * 2**-53.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = 0xFFFFFFFFFFFFFFFF

_U53 = np.uint64(11)
_INV53 = float(2.0 ** -53)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of a SplitMix64 stream as uint64."""
    if count < 0:
        raise ValueError("count must be non-negative")
    idx = np.arange(1, count + 1, dtype=np.uint64)
    states = np.uint64(seed & _MASK) + idx * _GOLDEN
    return _mix(states)


def uniforms(seed: int, count: int) -> np.ndarray:
    """`count` doubles in [0, 1) from the stream's top 53 bits."""
    return (splitmix64(seed, count) >> _U53).astype(np.float64) * _INV53


def normals(seed: int, count: int) -> np.ndarray:
    """`count` standard normals via Box-Muller over the SplitMix64 stream."""
    n_pairs = (count + 1) // 2
    raw = splitmix64(seed, 2 * n_pairs) >> _U53
    u1 = (raw[0::2].astype(np.float64) + 1.0) * _INV53
    u2 = raw[1::2].astype(np.float64) * _INV53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * n_pairs, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:count]


class SplitMix64:
    """Sequential view of the same stream, for draw-by-draw consumers."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def next_int(self, bound: int) -> int:
        # rejection-free modulo is fine here: bound << 2**64 makes bias negligible,
        # and determinism is what matters
        return self.next_u64() % bound


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a UTF-8 string; used to domain-separate seeds."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK
    return h


def derive_seed(seed: int, label: str) -> int:
    """Deterministic per-label child seed (stable across runs)."""
    return SplitMix64((seed & _MASK) ^ fnv1a64(label)).next_u64()
