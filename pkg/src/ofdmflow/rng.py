"""Counter-based random draws.

Every draw is a pure function of ``(seed, tag, *indices)``: the key is
hashed through chained SplitMix64 finalizers. Generation order, chunking
and threading therefore cannot change any value.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

# draw-kind tags
PLACEMENT = 1
SHADOWING = 2
FADING = 3


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash64(seed: int, tag: int, *indices) -> np.ndarray:
    """64-bit hash of the key; ``indices`` broadcast like numpy arrays."""
    with np.errstate(over="ignore"):
        state = _mix(np.asarray([seed & _MASK], dtype=np.uint64) + _GOLDEN)
        state = _mix(state ^ _mix(np.uint64(tag) + _GOLDEN))
        for idx in indices:
            k = np.asarray(idx, dtype=np.uint64)
            state = _mix(state ^ _mix(k * _GOLDEN + _GOLDEN))
    return state


def uniform(seed: int, tag: int, *indices) -> np.ndarray:
    """Uniform floats on [0, 1) with 53 random bits."""
    h = hash64(seed, tag, *indices)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def exponential(seed: int, tag: int, *indices) -> np.ndarray:
    """Unit-mean exponential draws by inversion."""
    return -np.log1p(-uniform(seed, tag, *indices))


def standard_normal(seed: int, tag: int, *indices) -> np.ndarray:
    """Box-Muller normals; the two uniforms are split on a trailing index."""
    u1 = uniform(seed, tag, *indices, 0)
    u2 = uniform(seed, tag, *indices, 1)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
