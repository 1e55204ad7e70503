"""Reproducible counter-based random substreams and Brownian increment records.

Every ensemble member gets independent streams keyed by (master seed, path
index, role), built on the Philox counter-based generator. The same key
always regenerates the same draws, on any platform and under any worker
count, which makes ensembles embarrassingly parallel and bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REGIME_ROLE = 0
WIENER_ROLE = 1


def substream(seed: int, index: int, role: int) -> np.random.Generator:
    """Independent generator for one (seed, substream index, role) triple."""
    ss = np.random.SeedSequence(entropy=(int(seed), int(index), int(role)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseStream:
    """Handle for the pair of substreams a single path consumes."""

    seed: int
    substream: int

    def regime_rng(self) -> np.random.Generator:
        return substream(self.seed, self.substream, REGIME_ROLE)

    def wiener_rng(self) -> np.random.Generator:
        return substream(self.seed, self.substream, WIENER_ROLE)


@dataclass(frozen=True, eq=False)
class NoiseRecord:
    """The Brownian increments actually consumed along one trajectory.

    ``increments[n]`` has variance equal to the n-th substep length. The
    record regenerates bit-identically from (seed, substream) given the same
    substep partition.
    """

    seed: int
    substream: int
    increments: np.ndarray

    def __post_init__(self):
        self.increments.setflags(write=False)

    @classmethod
    def generate(cls, stream: NoiseStream, lengths: np.ndarray) -> "NoiseRecord":
        z = stream.wiener_rng().standard_normal(lengths.size)
        return cls(seed=stream.seed, substream=stream.substream, increments=z * np.sqrt(lengths))

    def __eq__(self, other) -> bool:
        if not isinstance(other, NoiseRecord):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.substream == other.substream
            and np.array_equal(self.increments, other.increments)
        )


def sum_groups(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Sum consecutive groups of ``values``; group g covers starts[g]..starts[g+1]-1.

    Used to coarsen fine Brownian increments onto a dyadically coarser
    partition of the same path.
    """
    return np.add.reduceat(values, starts)
