"""Counter-based deterministic random numbers for the simulator.

Draw j of path i under seed s is

    u(s, i, j) = mix64(mix64(s + (i+1) * GOLDEN) + (j+1) * GOLDEN)

where GOLDEN = 0x9E3779B97F4A7C15 and mix64 is the SplitMix64 finaliser
(xor-shift / multiply avalanche).  Every draw is a pure function of
(seed, path index, draw index): streams are independent of scheduling,
chunking or evaluation order, identical draws are produced for every policy
evaluated under the same seed (common random numbers), and reruns are
bit-identical.  Uniforms take the top 53 bits, mapped into the open interval
(0, 1); normals apply the inverse normal CDF.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from .errors import ValidationError

__all__ = ["uniforms", "normals"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MAX = 2**64


def _mix64(h: np.ndarray) -> np.ndarray:
    h = h ^ (h >> np.uint64(30))
    h = h * _MIX1
    h = h ^ (h >> np.uint64(27))
    h = h * _MIX2
    return h ^ (h >> np.uint64(31))


def _check_seed(seed: int) -> np.uint64:
    if not isinstance(seed, (int, np.integer)) or not (0 <= int(seed) < _U64_MAX):
        raise ValidationError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return np.uint64(seed)


def uniforms(seed: int, paths, draw: int) -> np.ndarray:
    """Uniform (0, 1) draws u(seed, i, draw) for path indices i."""
    s = _check_seed(seed)
    i = np.asarray(paths, dtype=np.uint64)
    j = np.uint64(draw)
    with np.errstate(over="ignore"):
        stream = _mix64(s + (i + np.uint64(1)) * _GOLDEN)
        h = _mix64(stream + (j + np.uint64(1)) * _GOLDEN)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed: int, paths, draw: int) -> np.ndarray:
    """Standard normal draws: inverse normal CDF of :func:`uniforms`."""
    return ndtri(uniforms(seed, paths, draw))
