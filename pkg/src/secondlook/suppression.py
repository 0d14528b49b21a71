"""Zero-threshold non-maximum suppression for detector output.

Any two detections that overlap at all (IoU > 0) are redundant: only the
higher-confidence one survives. Non-overlapping detections are always kept,
so distinct candidate regions are never discarded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InvalidBoxError
from .geometry import BBox, overlaps


@dataclass(frozen=True)
class Detection:
    """Detector candidate: box plus confidence, optionally class-tagged."""

    box: BBox
    confidence: float
    label: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidBoxError(f"confidence outside [0,1]: {self.confidence}")

    def sort_key(self) -> tuple:
        # Descending confidence; ties broken by box coordinates, then label,
        # so output never depends on input order.
        return (-self.confidence, self.box.coords, self.label or "")

    def to_dict(self) -> dict:
        d = self.box.to_dict()
        d["confidence"] = self.confidence
        if self.label is not None:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Detection":
        return cls(box=BBox.from_dict(d), confidence=float(d["confidence"]), label=d.get("label"))


def suppress_zero_overlap(detections: Sequence[Detection]) -> list[Detection]:
    """Greedy NMS with a zero-overlap retention rule.

    Sweep detections by descending confidence; keep the current best and drop
    every remaining detection that overlaps it. A detection is removed only by
    direct overlap with a kept one (no transitive chaining). The survivors are
    pairwise non-overlapping and returned in sweep (confidence) order.
    """
    remaining = sorted(detections, key=Detection.sort_key)
    kept: list[Detection] = []
    while remaining:
        top = remaining.pop(0)
        kept.append(top)
        remaining = [d for d in remaining if not overlaps(d.box, top.box)]
    return kept


def is_suppressed(detections: Sequence[Detection]) -> bool:
    """True when no pair overlaps, i.e. re-running NMS would be a no-op."""
    for i, a in enumerate(detections):
        for b in detections[i + 1 :]:
            if overlaps(a.box, b.box):
                return False
    return True
