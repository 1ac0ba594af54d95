"""Counter-based random streams for reproducible parallel generation.

Every random quantity in the simulator is drawn from a stream whose state
is a pure function of (master seed, purpose, identifiers).  Workers can
therefore generate identical values for the same logical object no matter
how the grid is partitioned, and without exchanging generator state.

The generator is SplitMix64: the i-th output of a stream seeded with s is

    finalize(s + i * 0x9E3779B97F4A7C15)

which makes whole streams computable as vectorized expressions over i.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Stream kinds. New kinds must get fresh codes; reusing one silently
# correlates unrelated draws.
KIND_SYNAPSE = 1
KIND_EXTERNAL = 2

_U64_GAMMA = np.uint64(GOLDEN_GAMMA)
_U64_M1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_M2 = np.uint64(0x94D049BB133111EB)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)
_INV53 = float(2.0**-53)


def splitmix64_mix(state: int) -> int:
    """One SplitMix64 step from ``state``: advance by the golden gamma and
    finalize.  Pure function; the basis for both streams and tags."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_tag(kind: int, a: int, b: int, seed: int) -> int:
    """Derive a 64-bit stream tag from (seed, kind, a, b).

    Mixing order is fixed: seed + kind, mix, + a, mix, + b, mix.  Changing
    it breaks every recorded raster, so don't.
    """
    t = splitmix64_mix((seed + kind) & MASK64)
    t = splitmix64_mix((t + a) & MASK64)
    t = splitmix64_mix((t + b) & MASK64)
    return t


class RandomStream:
    """Sequential view of a SplitMix64 stream.

    Scalar reference implementation; the hot paths use the vectorized
    helpers below, which produce bit-identical values.
    """

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        # 53-bit mantissa, uniform in [0, 1)
        return (self.next_u64() >> 11) * _INV53

    def next_below(self, n: int) -> int:
        """Uniform-ish integer in [0, n). Plain modulo; the bias at
        n << 2^64 is far below anything observable here."""
        return self.next_u64() % n


def finalize_vector(states: np.ndarray) -> np.ndarray:
    """SplitMix64 output finalizer over a uint64 array (no gamma advance)."""
    z = states
    z = (z ^ (z >> _SHIFT30)) * _U64_M1
    z = (z ^ (z >> _SHIFT27)) * _U64_M2
    return z ^ (z >> _SHIFT31)


def mix_vector(states: np.ndarray) -> np.ndarray:
    """Vectorized ``splitmix64_mix`` over a uint64 array."""
    return finalize_vector(states + _U64_GAMMA)


def stream_block_u64(tag: int, count: int, first_index: int = 1) -> np.ndarray:
    """Outputs ``first_index .. first_index+count-1`` of the stream ``tag``
    as one vectorized evaluation (output i = finalize(tag + i*gamma))."""
    idx = np.arange(first_index, first_index + count, dtype=np.uint64)
    return finalize_vector(np.uint64(tag) + idx * _U64_GAMMA)


def u64_to_unit(u: np.ndarray) -> np.ndarray:
    """Map uint64 draws to doubles in [0, 1) with 53-bit resolution."""
    return (u >> _SHIFT11).astype(np.float64) * _INV53


def first_doubles(tags: np.ndarray) -> np.ndarray:
    """First double of each stream in a uint64 tag array.

    Equals ``RandomStream(tag).next_double()`` element-wise.
    """
    return u64_to_unit(_finalize_u64(tags + _U64_GAMMA))
