"""Axis-aligned box primitives and IoU.

All geometry lives in a single continuous coordinate frame; the pipeline
standardizes on a 1024x1024 canvas. Coordinates are floats because boxes
rescaled from arbitrary source resolutions land on fractional positions.
Edge-touching boxes intersect with zero area and therefore count as
non-overlapping everywhere downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import EmptyInputError, InvalidBoxError

CANONICAL_FRAME = (1024.0, 1024.0)


@dataclass(frozen=True, order=True)
class BBox:
    """Rectangle with strictly positive area; ordering is lexicographic on coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidBoxError(f"non-finite coordinates: {coords}")
        if any(c < 0 for c in coords):
            raise InvalidBoxError(f"negative coordinates: {coords}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise InvalidBoxError(f"degenerate box (needs x_min < x_max and y_min < y_max): {coords}")

    @property
    def coords(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "y_min": self.y_min, "x_max": self.x_max, "y_max": self.y_max}

    @classmethod
    def from_dict(cls, d: dict) -> "BBox":
        return cls(float(d["x_min"]), float(d["y_min"]), float(d["x_max"]), float(d["y_max"]))


def area(b: BBox) -> float:
    """Box area in square pixels."""
    return (b.x_max - b.x_min) * (b.y_max - b.y_min)


def intersection(a: BBox, b: BBox) -> Optional[BBox]:
    """Overlap rectangle, or None when the interiors do not intersect.

    Shared edges and corners yield None: the overlap region has zero area.
    """
    x_min = max(a.x_min, b.x_min)
    y_min = max(a.y_min, b.y_min)
    x_max = min(a.x_max, b.x_max)
    y_max = min(a.y_max, b.y_max)
    if x_min >= x_max or y_min >= y_max:
        return None
    return BBox(x_min, y_min, x_max, y_max)


def iou(a: BBox, b: BBox) -> float:
    """Intersection area over union area; 0 when disjoint, 1 only for identical boxes."""
    inter = intersection(a, b)
    if inter is None:
        return 0.0
    inter_area = area(inter)
    return inter_area / (area(a) + area(b) - inter_area)


def overlaps(a: BBox, b: BBox) -> bool:
    """True when the boxes share positive area (exact test, no epsilon)."""
    return intersection(a, b) is not None


def hull(boxes: Iterable[BBox]) -> BBox:
    """Smallest axis-aligned box containing every input box."""
    boxes = list(boxes)
    if not boxes:
        raise EmptyInputError("hull of zero boxes")
    return BBox(
        min(b.x_min for b in boxes),
        min(b.y_min for b in boxes),
        max(b.x_max for b in boxes),
        max(b.y_max for b in boxes),
    )
