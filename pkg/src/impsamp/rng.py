"""Deterministic, splittable random number streams.

A stream is identified by a (seed, stream_id) pair and is backed by the
counter-based Philox generator, so the draw sequence depends only on that
pair and never on thread scheduling or call order elsewhere in the
program.  Streams are value objects: ``stream.generator()`` always starts
from the beginning of the sequence, so a consumer that needs several
independent draws derives substreams instead of reusing one stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    """One round of the splitmix64 mixer (avalanching 64-bit hash)."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _mix(a: int, b: int) -> int:
    return _splitmix64(_splitmix64(a & _MASK64) ^ ((b & _MASK64) * 0x9E3779B97F4A7C15 & _MASK64))


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = ((self.seed & _MASK64) << 64) | (self.stream_id & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RngStream":
        """Derive an independent child stream.

        The derivation hashes (seed, stream_id) into a fresh seed so that
        nested substreams never collide with siblings or parents.
        """
        return RngStream(seed=_mix(self.seed, self.stream_id), stream_id=index)

    def substreams(self, n: int) -> list["RngStream"]:
        return [self.substream(i) for i in range(n)]
