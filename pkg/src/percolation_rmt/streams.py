"""Counter-based random streams.

Every random number is a pure function of ``(seed, replica, channel, counter)``
so any single matrix entry can be regenerated in isolation and results do not
depend on how work is split across processes.  The mixing function is the
SplitMix64 finalizer applied twice with key injection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_OFFSET = 1 << 31  # logical indices are shifted to be nonnegative

# Fixed channel ids; one independent uniform stream per role.
MASK = 0
ENTRY_A = 1
ENTRY_B = 2


def _mix_int(x: int) -> int:
    x &= _MASK64
    x ^= x >> 30
    x = (x * _M1) & _MASK64
    x ^= x >> 27
    x = (x * _M2) & _MASK64
    x ^= x >> 31
    return x


def _mix_array(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * np.uint64(_M1)
        x = x ^ (x >> np.uint64(27))
        x = x * np.uint64(_M2)
        x = x ^ (x >> np.uint64(31))
    return x


def _to_unit(x: np.ndarray) -> np.ndarray:
    # 53 high bits, shifted by half an ulp so the result lies in (0, 1).
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class StreamKey:
    """Identifies one replica's family of streams."""

    seed: int
    replica: int = 0

    def channel_key(self, channel: int) -> int:
        k = _mix_int(self.seed ^ 0x5DEECE66D)
        k = _mix_int(k + (self.replica + 1) * _GOLDEN)
        return _mix_int(k + (channel + 1) * _M2)

    def split(self, replica: int) -> "StreamKey":
        """Key for a derived replica; distinct replicas never share streams."""
        return StreamKey(_mix_int(self.seed * _GOLDEN + self.replica), replica)


def uniforms_1d(key: StreamKey, channel: int, counters) -> np.ndarray:
    """Uniforms in (0, 1) for integer counters (e.g. sample indices)."""
    ck = key.channel_key(channel)
    c = np.asarray(counters, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        x = _mix_array(c * np.uint64(_GOLDEN) + np.uint64(ck))
        x = _mix_array(x ^ np.uint64(_mix_int(ck + 1)))
    return _to_unit(x)


def uniforms_2d(key: StreamKey, channel: int, i, j) -> np.ndarray:
    """Uniforms in (0, 1) keyed by logical index pairs ``(i, j)``.

    ``i`` and ``j`` broadcast against each other.  The pair is used as given,
    so callers wanting a symmetric field must pass ``i <= j``.
    """
    ii = (np.asarray(i, dtype=np.int64) + _OFFSET).astype(np.uint64)
    jj = (np.asarray(j, dtype=np.int64) + _OFFSET).astype(np.uint64)
    counter = (ii << np.uint64(32)) | jj
    return uniforms_1d(key, channel, counter.view(np.int64))
