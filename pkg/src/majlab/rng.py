"""Deterministic random-number streams.

A stream is identified by ``(master_seed, stream_index)`` and is bit-identical
across platforms, runs, and thread counts.  The generator is xoshiro256**
(256-bit state); stream states are derived with SplitMix64 so that distinct
indices give fully decorrelated streams with no shared output prefix.  See
``majlab._kernels`` for the exact fixed algorithms and draw protocols.

Streams are single-owner: parallel work derives disjoint stream indices
instead of sharing one stream.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as _k

_U64_MAX = (1 << 64) - 1


def _check_u64(value: int, name: str) -> int:
    value = int(value)
    if not 0 <= value <= _U64_MAX:
        raise ValueError(f"{name} must be in [0, 2**64), got {value}")
    return value


class RngStream:
    """A single xoshiro256** stream; see :func:`derive_stream`."""

    __slots__ = ("_state", "master_seed", "stream_index")

    def __init__(self, state: np.ndarray, master_seed: int, stream_index: int):
        self._state = np.asarray(state, dtype=np.uint64).copy()
        if self._state.shape != (4,):
            raise ValueError("state must be 4 words of 64 bits")
        self.master_seed = master_seed
        self.stream_index = stream_index

    @property
    def state(self) -> np.ndarray:
        """Copy of the 256-bit generator state (4 u64 words)."""
        return self._state.copy()

    def next_u64(self) -> int:
        return int(_k.one_u64(self._state))

    def next_double(self) -> float:
        """Uniform double in [0, 1): top 53 bits of the next u64."""
        return (int(_k.one_u64(self._state)) >> 11) * 2.0**-53

    def u64_block(self, count: int) -> np.ndarray:
        out = np.empty(int(count), dtype=np.uint64)
        _k.fill_u64(self._state, out)
        return out

    def double_block(self, count: int) -> np.ndarray:
        out = np.empty(int(count), dtype=np.float64)
        _k.fill_double(self._state, out)
        return out

    def clone(self) -> "RngStream":
        """Independent copy at the current state (for internal retry logic)."""
        return RngStream(self._state, self.master_seed, self.stream_index)

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"RngStream(master_seed={self.master_seed}, "
            f"stream_index={self.stream_index})"
        )


def derive_stream(master_seed: int, stream_index: int) -> RngStream:
    """Derive the stream at ``stream_index`` from ``master_seed``.

    Identical arguments yield bit-identical output sequences; distinct
    indices yield unrelated streams (SplitMix64 avalanche over the pair).
    """
    master_seed = _check_u64(master_seed, "master_seed")
    stream_index = _check_u64(stream_index, "stream_index")
    state = _k.derive_state_words(master_seed, stream_index)
    return RngStream(state, master_seed, stream_index)
