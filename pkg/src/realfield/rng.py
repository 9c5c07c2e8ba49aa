"""Counter-based random numbers keyed by (seed, stream, draw index).

Every stream is a SplitMix64 sequence whose starting state is derived
from ``(seed, domain, stream_id)``.  Because SplitMix64's n-th output is
a pure function of ``state + n * gamma``, any draw of any stream can be
computed directly, in any order, on any platform, and vectorized over
many streams at once.  Trial ``i`` always uses stream ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_SHIFT53 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# Distinct domains keep draws of different purposes from colliding.
TRIAL = 0
GROUP = 1
HIT = 2


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _u64(x) -> np.ndarray:
    return np.asarray(x).astype(np.uint64)


def stream_keys(seed: int, stream_ids, domain: int = TRIAL) -> np.ndarray:
    seed_arr = np.array([seed % 2**64], dtype=np.uint64)
    dom = np.array([domain], dtype=np.uint64)
    base = _mix(seed_arr ^ _mix(dom * _GAMMA + _GAMMA))
    ids = _u64(np.atleast_1d(stream_ids))
    return _mix(base ^ _mix(ids + _GAMMA))


def counter_uniform(seed: int, stream_ids, draw_index, domain: int = TRIAL) -> np.ndarray:
    """Uniform doubles in [0, 1) for each (stream, draw) pair.

    ``stream_ids`` and ``draw_index`` broadcast against each other.
    """
    keys = stream_keys(seed, stream_ids, domain)
    idx = _u64(np.atleast_1d(draw_index)) + np.uint64(1)
    bits = _mix(keys + idx * _GAMMA)
    return (bits >> _SHIFT53).astype(np.float64) * _INV53


@dataclass(frozen=True)
class RngStream:
    """The random sequence owned by one trial (or one trial group)."""

    seed: int
    stream_id: int
    domain: int = TRIAL

    def uniform(self, n: int, offset: int = 0) -> np.ndarray:
        """Draws ``offset .. offset+n-1`` of this stream."""
        return counter_uniform(self.seed, self.stream_id,
                               np.arange(offset, offset + n, dtype=np.uint64), self.domain)

    def draw(self, index: int) -> float:
        return float(self.uniform(1, offset=index)[0])


def categorical(probs, u) -> np.ndarray:
    """Map uniforms ``u`` to category indices with weights ``probs``.

    Categories with zero weight are never returned.
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.isfinite(p).all():
        raise ValueError("probabilities must be a non-empty, non-negative vector")
    cum = np.cumsum(p)
    total = cum[-1]
    if total <= 0:
        raise ValueError("probabilities sum to zero")
    idx = np.searchsorted(cum, np.asarray(u, dtype=float) * total, side="right")
    last = int(np.flatnonzero(p > 0)[-1])
    return np.minimum(idx, last)
