from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ltbridge.common.config import NOISE_CHUNK

# stream purposes, the second spawn-key entry
NOISE = 0
AUX = 1
LAUNCH = 2
BRIDGE_CORRECTION = 3


@dataclass(frozen=True)
class RandomSource:
    """One reproducible stream family per (master seed, path index)."""

    seed: int
    index: int = 0

    def generator(self, purpose: int = NOISE) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(entropy=self.seed, spawn_key=(self.index, purpose)))


def aux_uniforms(seed: int, indices: Sequence[int], count: int = 1) -> np.ndarray:
    """``count`` uniforms per path from its auxiliary stream, shape (n_paths, count)."""
    return np.array([RandomSource(seed, int(i)).generator(AUX).random(count) for i in indices]).reshape(len(indices), count)


class NormalStreams:
    """Per-path normal streams read in lockstep: the k-th call returns draw k of every stream.

    Draws are refilled ``chunk`` steps at a time, so a path's sequence does not
    depend on the chunk size or on which other paths share the batch.
    """

    def __init__(self, seed: int, indices: Sequence[int], purpose: int = NOISE, width: int = 1, chunk: int = NOISE_CHUNK):
        self.generators = [RandomSource(seed, int(i)).generator(purpose) for i in indices]
        self.width = width
        self.chunk = chunk
        self._buffer = np.empty((chunk, len(self.generators), width))
        self._pos = chunk

    def _refill(self) -> None:
        for j, gen in enumerate(self.generators):
            self._buffer[:, j, :] = gen.standard_normal((self.chunk, self.width))
        self._pos = 0

    def next(self) -> np.ndarray:
        if self._pos == self.chunk:
            self._refill()
        row = self._buffer[self._pos]
        self._pos += 1
        return row[:, 0] if self.width == 1 else row


class UniformStreams(NormalStreams):
    def _refill(self) -> None:
        for j, gen in enumerate(self.generators):
            self._buffer[:, j, :] = gen.random((self.chunk, self.width))
        self._pos = 0
