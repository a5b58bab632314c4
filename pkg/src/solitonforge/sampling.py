"""Deterministic grids and seeded random samples inside a chart's domain box."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MARGIN = 0.05
FREE_RANGE = (-2.0, 2.0)
POSITIVE_RANGE = (0.2, 3.0)
DEFAULT_COUNT = 20


@dataclass(frozen=True)
class Box:
    """Axis-aligned sampling box; ``counts`` are grid points per axis (inclusive linspace)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.lo)

    def grid(self) -> np.ndarray:
        axes = [np.linspace(a, b, c) for a, b, c in zip(self.lo, self.hi, self.counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def random(self, count: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((count, self.dim))
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return lo + u * (hi - lo)

    def shrink(self, lo: Sequence[float], hi: Sequence[float]) -> "Box":
        return Box(
            tuple(max(a, b) for a, b in zip(self.lo, lo)),
            tuple(min(a, b) for a, b in zip(self.hi, hi)),
            self.counts,
        )


def default_box(positive: Sequence[int], dim: int, count: int = DEFAULT_COUNT) -> Box:
    lo = [POSITIVE_RANGE[0] if k in positive else FREE_RANGE[0] for k in range(dim)]
    hi = [POSITIVE_RANGE[1] if k in positive else FREE_RANGE[1] for k in range(dim)]
    return Box(tuple(lo), tuple(hi), (count,) * dim)


def check_box(box: Box, positive: Sequence[int]) -> None:
    """Reject boxes that come closer than ``MARGIN`` to an open boundary."""
    for k in positive:
        if box.lo[k] < MARGIN:
            raise ValueError(
                f"sampling range for coordinate {k} starts at {box.lo[k]}, "
                f"closer than {MARGIN} to the boundary 0"
            )
    for a, b, c in zip(box.lo, box.hi, box.counts):
        if not (a <= b) or c < 1:
            raise ValueError(f"bad sampling range [{a}, {b}] with {c} points")


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
