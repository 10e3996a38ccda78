"""Planar geometry primitives: points, boxes, and a uniform-grid spatial index.

Coordinates are in km throughout. All distance comparisons in the package use
the inclusive convention (d <= r counts as inside / linked).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def distance(a, b) -> float:
    """Euclidean distance between two points (any 2-sequences)."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max]."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        for v in (self.x_min, self.x_max, self.y_min, self.y_max):
            if not math.isfinite(v):
                raise ValueError("BoxRegion coordinates must be finite")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("BoxRegion must have positive extent")

    @classmethod
    def square(cls, half_side: float, center=(0.0, 0.0)) -> "BoxRegion":
        cx, cy = center
        return cls(cx - half_side, cx + half_side, cy - half_side, cy + half_side)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self):
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def padded(self, margin: float) -> "BoxRegion":
        return BoxRegion(self.x_min - margin, self.x_max + margin,
                         self.y_min - margin, self.y_max + margin)

    def shrunk(self, margin: float) -> "BoxRegion":
        return BoxRegion(self.x_min + margin, self.x_max - margin,
                         self.y_min + margin, self.y_max - margin)

    def scaled(self, factor: float) -> "BoxRegion":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return BoxRegion(self.x_min * factor, self.x_max * factor,
                         self.y_min * factor, self.y_max * factor)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points inside the box (boundary inclusive)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return ((pts[:, 0] >= self.x_min) & (pts[:, 0] <= self.x_max) &
                (pts[:, 1] >= self.y_min) & (pts[:, 1] <= self.y_max))


class SpatialIndex:
    """Uniform-grid index over a fixed point set supporting radius queries.

    A point p lives in cell (floor(p.x/cell_size), floor(p.y/cell_size)).
    The index is immutable after construction; concurrent reads are safe.
    """

    def __init__(self, points: np.ndarray, cell_size: float):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if cell_size <= 0 or not math.isfinite(cell_size):
            raise ValueError("cell_size must be positive and finite")
        self.points = points
        self.cell_size = float(cell_size)
        self.cells: dict[tuple[int, int], np.ndarray] = {}
        if len(points):
            keys = np.floor(points / self.cell_size).astype(np.int64)
            order = np.lexsort((keys[:, 1], keys[:, 0]))
            sorted_keys = keys[order]
            # split the id array at cell boundaries
            change = np.any(np.diff(sorted_keys, axis=0) != 0, axis=1)
            starts = np.concatenate(([0], np.nonzero(change)[0] + 1))
            ends = np.concatenate((starts[1:], [len(points)]))
            for s, e in zip(starts, ends):
                key = (int(sorted_keys[s, 0]), int(sorted_keys[s, 1]))
                self.cells[key] = np.sort(order[s:e])

    def __len__(self) -> int:
        return len(self.points)

    def radius_query(self, center, r: float) -> np.ndarray:
        """Ids of indexed points within distance r of center (inclusive)."""
        if r < 0:
            raise ValueError("query radius must be non-negative")
        if not len(self.points):
            return np.empty(0, dtype=np.int64)
        cx, cy = float(center[0]), float(center[1])
        cs = self.cell_size
        ix_lo = math.floor((cx - r) / cs)
        ix_hi = math.floor((cx + r) / cs)
        iy_lo = math.floor((cy - r) / cs)
        iy_hi = math.floor((cy + r) / cs)
        chunks = []
        for ix in range(ix_lo, ix_hi + 1):
            for iy in range(iy_lo, iy_hi + 1):
                ids = self.cells.get((ix, iy))
                if ids is not None:
                    chunks.append(ids)
        if not chunks:
            return np.empty(0, dtype=np.int64)
        cand = np.concatenate(chunks)
        d2 = (self.points[cand, 0] - cx) ** 2 + (self.points[cand, 1] - cy) ** 2
        return np.sort(cand[d2 <= r * r])

    def query_any(self, center, r: float) -> bool:
        """True if any indexed point is within distance r of center."""
        return len(self.radius_query(center, r)) > 0
