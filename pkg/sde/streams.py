"""
Counter-based random streams.

Paths are grouped in canonical chunks of CHUNK_SIZE consecutive indices.
Every (master_seed, chunk, stream) triple owns an independent Philox
generator, and each step draws a full chunk of rows, so the noise seen by
path i depends only on (master_seed, i), never on the path count or on how
chunks are spread over workers.
"""

from enum import IntEnum
from typing import List, Tuple

import numpy as np

CHUNK_SIZE = 256


class Stream(IntEnum):
    """Independent noise sources of one simulation."""

    BROWNIAN = 0  # w driving x
    FLOW = 1  # B^(0), ..., B^(d) driving eta


def chunk_generator(master_seed: int, chunk: int, stream: Stream = Stream.BROWNIAN) -> np.random.Generator:
    """Philox generator for one chunk of one stream."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(chunk), int(stream)))
    return np.random.Generator(np.random.Philox(seq))


def chunk_layout(n_paths: int) -> List[Tuple[int, int]]:
    """(chunk index, path count) for every chunk covering n_paths."""
    chunks = []
    for chunk, start in enumerate(range(0, n_paths, CHUNK_SIZE)):
        chunks.append((chunk, min(CHUNK_SIZE, n_paths - start)))
    return chunks


def path_keys(n_paths: int) -> np.ndarray:
    """Per-path (chunk, slot) keys; with the master seed they fix a path's noise."""
    idx = np.arange(n_paths)
    return np.stack([idx // CHUNK_SIZE, idx % CHUNK_SIZE], axis=1)


class ChunkNoise:
    """Step-by-step normal increments for one chunk."""

    def __init__(self, master_seed: int, chunk: int, count: int, width: int, stream: Stream = Stream.BROWNIAN) -> None:
        self._gen = chunk_generator(master_seed, chunk, stream)
        self.count = count
        self.width = width

    def draw(self, dt: float) -> np.ndarray:
        """N(0, dt) increments of shape (count, width)."""
        z = self._gen.standard_normal((CHUNK_SIZE, self.width))
        return np.sqrt(dt) * z[: self.count]
