"""Counter-based random streams.

Every draw is a pure function of a :class:`StreamKey`. There is no generator
state to advance, so two algorithms that consume the same edge variables in a
different order still see identical values. The mixer is the SplitMix64
finalizer applied to each key field in turn; it is not cryptographic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_FIELD_SALTS = (
    np.uint64(0x243F6A8885A308D3),
    np.uint64(0x13198A2E03707344),
    np.uint64(0xA4093822299F31D0),
    np.uint64(0x082EFA98EC4E6C89),
    np.uint64(0x452821E638D01377),
)
_TO_UNIT = 1.0 / (1 << 53)


class Purpose(enum.IntEnum):
    EDGE_PAIR = 1
    PERMUTATION = 2
    BINOMIAL_DRAW = 3


@dataclass(frozen=True)
class StreamKey:
    base_seed: int
    replication: int
    purpose: Purpose
    index_a: int = 0
    index_b: int = 0

    def __post_init__(self):
        if not 0 <= self.base_seed <= _MASK64:
            raise ParameterError("base_seed must be an unsigned 64-bit integer")
        for name in ("replication", "index_a", "index_b"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")

    @classmethod
    def edge(cls, base_seed: int, replication: int, i: int, j: int) -> "StreamKey":
        """Key for the unordered vertex pair {i, j}; argument order is irrelevant."""
        if i == j:
            raise ParameterError("an edge key needs two distinct vertices")
        a, b = (i, j) if i < j else (j, i)
        return cls(base_seed, replication, Purpose.EDGE_PAIR, a, b)


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_keys(base_seed, replication, purpose, index_a, index_b) -> np.ndarray:
    """Vectorised 64-bit hash of key fields; arguments broadcast against each other."""
    fields = np.broadcast_arrays(
        *(np.asarray(f, dtype=np.uint64) for f in (base_seed, replication, int(purpose), index_a, index_b))
    )
    h = np.zeros(fields[0].shape, dtype=np.uint64)
    with np.errstate(over="ignore"):  # arithmetic is mod 2**64 by design
        for field, salt in zip(fields, _FIELD_SALTS):
            h = _mix(h + _GOLDEN + (field ^ salt))
    return h


def uniform01_array(base_seed, replication, purpose, index_a, index_b) -> np.ndarray:
    """Uniforms on [0, 1) with 53-bit resolution, one per broadcast key."""
    h = hash_keys(base_seed, replication, purpose, index_a, index_b)
    return (h >> np.uint64(11)).astype(np.float64) * _TO_UNIT


def edge_uniforms(base_seed: int, replication: int, v: int, others) -> np.ndarray:
    """Uniforms for the pairs {v, u} over an array of vertices ``others`` (none equal to v)."""
    others = np.asarray(others, dtype=np.int64)
    lo = np.minimum(others, v)
    hi = np.maximum(others, v)
    return uniform01_array(base_seed, replication, Purpose.EDGE_PAIR, lo, hi)


def uniform01(key: StreamKey) -> float:
    u = uniform01_array(key.base_seed, key.replication, key.purpose, [key.index_a], [key.index_b])
    return float(u[0])


def bernoulli(key: StreamKey, p: float) -> bool:
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability must lie in [0, 1], got {p}")
    return uniform01(key) < p
