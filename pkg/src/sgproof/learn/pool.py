"""Bounded sample pools with provenance tags."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..core import Position
from ..prooftree import CutLocation


@dataclass(frozen=True)
class GlobalSample:
    position: Position
    target: float
    source: str
    sigma: int
    proof_index: int


@dataclass(frozen=True)
class LocalSample:
    position: Position
    cut: CutLocation
    target: float
    source: str
    sigma: int
    proof_index: int


class SamplePool:
    """FIFO pool; sampling is with replacement."""

    def __init__(self, capacity: int = 20_000):
        self.items: deque = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.items)

    def add(self, sample) -> None:
        if not np.isfinite(sample.target):
            raise ValueError("sample target must be finite")
        self.items.append(sample)

    def extend(self, samples) -> None:
        for s in samples:
            self.add(s)

    def sample(self, rng: np.random.Generator, k: int) -> list:
        if not self.items:
            raise ValueError("pool is empty")
        idx = rng.integers(len(self.items), size=k)
        return [self.items[int(i)] for i in idx]

    def sources(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.items:
            out[s.source] = out.get(s.source, 0) + 1
        return out

    def sigmas(self) -> set[int]:
        return {s.sigma for s in self.items}
