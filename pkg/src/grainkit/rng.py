"""Counter-based pseudo-random primitives (splitmix64).

Every stochastic draw in the renderer and dataset builder is a pure
function of (seed, purpose tag, index...), so results never depend on
evaluation order, tiling, or thread count.  The mixer is the standard
splitmix64 finalizer; uint64 arithmetic wraps intentionally.
"""
from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(x) -> np.ndarray:
    """splitmix64 finalizer, elementwise over uint64 input."""
    z = np.asarray(x).astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        z += _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z ^= z >> np.uint64(31)
    return z


def mix(a, b) -> np.ndarray:
    """Combine two streams/indices into one key, elementwise."""
    with np.errstate(over="ignore"):
        return mix64(mix64(a) ^ np.asarray(b).astype(np.uint64))


def mix_int(*parts: int) -> int:
    """Scalar chained mix of python ints; used for sub-seed derivation."""
    k = np.uint64(0)
    for p in parts:
        k = mix(k, np.uint64(p & 0xFFFFFFFFFFFFFFFF))
    return int(k)


def u01_from_bits(bits: np.ndarray) -> np.ndarray:
    """Map uint64 hashes to float64 uniforms in [0, 1)."""
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def u01_pair_from_bits(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two independent 32-bit uniforms in [0, 1) from one uint64 hash."""
    hi = (bits >> np.uint64(32)).astype(np.float64) * (1.0 / (1 << 32))
    lo = (bits & np.uint64(0xFFFFFFFF)).astype(np.float64) * (1.0 / (1 << 32))
    return hi, lo


def normal_pair_from_bits(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Box-Muller standard-normal pair from one uint64 hash."""
    u1, u2 = u01_pair_from_bits(bits)
    u1 = np.maximum(u1, 2.0 ** -33)  # guard log(0)
    r = np.sqrt(-2.0 * np.log(u1))
    ang = (2.0 * np.pi) * u2
    return r * np.cos(ang), r * np.sin(ang)
