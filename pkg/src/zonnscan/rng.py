"""Counter-based random number streams.

Every draw is a pure function of ``(seed, stream_id, draw_index)``, so any
slice of a stream can be regenerated independently of how the work that
consumes it is partitioned.  The generator is the splitmix64 sequence: the
64-bit state for draw ``i`` is ``key + (i + 1) * GOLDEN`` (mod 2**64) and the
output is the standard splitmix64 finalizer of that state.  The same integer
arithmetic is reproduced exactly by the numba kernels, so both compute
backends consume bitwise-identical uniforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_STREAM_SALT = 0x6A09E667F3BCC909

# uint64 copies for vectorized use
_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX_A = np.uint64(_MIX_A)
_U_MIX_B = np.uint64(_MIX_B)

#: scale turning the top 53 bits of a uint64 into a double in [0, 1)
UNIT_SCALE = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int, modulo 2**64."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, stream_id: int) -> int:
    """Collapse (seed, stream_id) into the 64-bit key of one stream."""
    h = mix64(seed)
    h = mix64(h ^ ((stream_id * GOLDEN + _STREAM_SALT) & _MASK))
    return h


def _check_u64(name: str, value: int) -> int:
    if not isinstance(value, (int, np.integer)):
        raise ValidationError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if not 0 <= value <= _MASK:
        raise ValidationError(f"{name} must be in [0, 2**64), got {value}")
    return value


@dataclass(frozen=True)
class SeededStream:
    """One independent random stream, addressed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", _check_u64("seed", self.seed))
        object.__setattr__(self, "stream_id", _check_u64("stream_id", self.stream_id))

    @property
    def key(self) -> int:
        return derive_key(self.seed, self.stream_id)

    def unit_doubles(self, start: int, count: int) -> np.ndarray:
        """Draws ``start .. start+count-1`` of this stream, uniform on [0, 1)."""
        return unit_doubles(self.key, start, count)


def unit_doubles(key: int, start: int, count: int) -> np.ndarray:
    """Vectorized splitmix64 draws for one stream key.

    Draw ``i`` only depends on ``(key, i)``; concatenating two calls covering
    adjacent index ranges equals one call covering their union.
    """
    if count < 0:
        raise ValidationError(f"count must be nonnegative, got {count}")
    idx = np.arange(start, start + count, dtype=np.uint64)
    z = np.uint64(key) + (idx + np.uint64(1)) * _U_GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _U_MIX_A
    z = (z ^ (z >> np.uint64(27))) * _U_MIX_B
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)).astype(np.float64) * UNIT_SCALE
