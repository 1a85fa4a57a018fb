"""Normalized bounding-box arithmetic underlying every metric in the toolkit.

All boxes live in normalized image coordinates: each coordinate is a
fraction of image width or height in [0, 1]. All functions are pure and
all types are immutable, so they are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in normalized coordinates with strictly positive area.

    Invariants: 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1. Zero-area boxes
    are rejected at construction because every downstream formula divides
    by areas.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "x2", "y2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValueError(f"bbox coordinate {name}={v!r} is not a finite number")
            object.__setattr__(self, name, float(v))
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"bbox coordinate {name}={v} outside [0, 1]")
        if not self.x1 < self.x2:
            raise ValueError(f"degenerate bbox: x1={self.x1} must be < x2={self.x2}")
        if not self.y1 < self.y2:
            raise ValueError(f"degenerate bbox: y1={self.y1} must be < y2={self.y2}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class ImageDims:
    """Pixel dimensions of a source image, used to normalize pixel boxes."""

    width_px: int
    height_px: int

    def __post_init__(self) -> None:
        for name in ("width_px", "height_px"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name}={v!r} must be an integer >= 1")


def area(box: BBox) -> float:
    """Box area as a fraction of total image area, in (0, 1]."""
    return (box.x2 - box.x1) * (box.y2 - box.y1)


def intersect(a: BBox, b: BBox) -> BBox | None:
    """Overlap rectangle of two boxes, or None if the overlap has zero area.

    Boxes touching only at an edge or corner count as non-overlapping:
    measure-zero contact contributes nothing to any overlap metric.
    """
    x1 = max(a.x1, b.x1)
    y1 = max(a.y1, b.y1)
    x2 = min(a.x2, b.x2)
    y2 = min(a.y2, b.y2)
    if x1 >= x2 or y1 >= y2:
        return None
    return BBox(x1, y1, x2, y2)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1]. 0 when disjoint."""
    inter = intersect(a, b)
    if inter is None:
        return 0.0
    inter_area = area(inter)
    union = area(a) + area(b) - inter_area
    return inter_area / union


def normalize_box(px_box: Sequence[int], dims: ImageDims) -> BBox:
    """Convert a pixel-space [x1, y1, x2, y2] box into a normalized BBox.

    Raises ValueError echoing the offending coordinates when the pixel box
    is degenerate or falls outside the image bounds.
    """
    if len(px_box) != 4:
        raise ValueError(f"pixel box must have 4 coordinates, got {list(px_box)!r}")
    px1, py1, px2, py2 = px_box
    if px1 >= px2:
        raise ValueError(f"pixel box {list(px_box)!r} has zero width (x1 >= x2)")
    if py1 >= py2:
        raise ValueError(f"pixel box {list(px_box)!r} has zero height (y1 >= y2)")
    if px1 < 0 or py1 < 0 or px2 > dims.width_px or py2 > dims.height_px:
        raise ValueError(
            f"pixel box {list(px_box)!r} outside image bounds "
            f"{dims.width_px}x{dims.height_px}"
        )
    return BBox(
        px1 / dims.width_px,
        py1 / dims.height_px,
        px2 / dims.width_px,
        py2 / dims.height_px,
    )
