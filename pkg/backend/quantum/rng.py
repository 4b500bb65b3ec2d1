"""Counter-based random streams split per party."""
from __future__ import annotations

import zlib
from typing import Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def party_generator(seed: int, party: str) -> np.random.Generator:
    """Philox stream keyed by ``(seed, crc32(party))``.

    Two parties never share a stream and adding a party leaves the others untouched.
    """

    if seed < 0:
        raise ValueError(f"Зерно должно быть неотрицательным, получено {seed}.")
    key = np.random.SeedSequence([int(seed), zlib.crc32(party.encode("utf-8"))])
    return np.random.Generator(np.random.Philox(key))


class PartyStreams:
    """Lazily created per-party generators for one seeded run."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"Зерно должно быть неотрицательным, получено {seed}.")
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def __getitem__(self, party: str) -> np.random.Generator:
        stream = self._streams.get(party)
        if stream is None:
            stream = self._streams[party] = party_generator(self.seed, party)
        return stream

    def choice(self, party: str, options: Sequence[T]) -> T:
        return options[int(self[party].integers(len(options)))]

    def bit(self, party: str) -> int:
        return int(self[party].integers(2))
