"""Counter-based random substreams, one per simulated path."""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 4096
STEP_CHUNK = 256


def path_generator(seed: int, stream_id: int, path: int) -> np.random.Generator:
    """Philox generator for a single path.

    The key depends only on ``(seed, stream_id, path)``, never on the path
    count or on the worker that simulates the path.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id), int(path)))
    return np.random.Generator(np.random.Philox(sequence))


class PathNoise:
    """Standard normal increments for the paths ``start .. stop-1``.

    Each path draws from its own generator in chunks of :data:`STEP_CHUNK`
    steps; row ``i`` of every step is the next draw of path ``start + i``.
    """

    def __init__(self, seed: int, stream_id: int, start: int, stop: int, d: int, chunk: int = STEP_CHUNK):
        self.d = d
        self.chunk = chunk
        self._generators = [path_generator(seed, stream_id, path) for path in range(start, stop)]
        self._buffer = np.empty((stop - start, 0, d))
        self._cursor = 0

    def next_step(self, remaining: int) -> np.ndarray:
        """Increments of one step; ``remaining`` bounds the size of a refill."""
        if self._cursor == self._buffer.shape[1]:
            size = max(1, min(self.chunk, remaining))
            self._buffer = np.stack([g.standard_normal((size, self.d)) for g in self._generators], axis=0)
            self._cursor = 0
        noise = self._buffer[:, self._cursor, :]
        self._cursor += 1
        return noise


def block_layout(n_paths: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """``(start, stop)`` path ranges of every scheduling block."""
    return [(start, min(start + block_size, n_paths)) for start in range(0, n_paths, block_size)]
