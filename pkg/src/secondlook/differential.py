"""Differential comparison: detector candidates vs. reader annotations.

A suppressed detection becomes a referral exactly when it overlaps none of
the reader's boxes - the strict zero-IoU condition, evaluated with exact
rectangle intersection (no epsilon). When the reader marked nothing, the
maximum over an empty annotation set is taken as 0, so every detection is
referred: a reader who marked nothing is shown everything the detector found.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import UnsuppressedInputError
from .geometry import BBox, overlaps
from .suppression import Detection, is_suppressed, suppress_zero_overlap

DEFAULT_CONFIDENCE_FLOOR = 0.25

GATE_NORMAL = "normal"
GATE_ABNORMAL = "abnormal"
GATE_UNAVAILABLE = "unavailable"


@dataclass
class ReferralSet:
    """Detections flagged for second-look review, with the annotations they were screened against."""

    image_id: str
    referrals: list[Detection] = field(default_factory=list)
    annotations_used: list[BBox] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "referrals": [d.to_dict() for d in self.referrals],
            "annotations_used": [b.to_dict() for b in self.annotations_used],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReferralSet":
        return cls(
            image_id=d["image_id"],
            referrals=[Detection.from_dict(r) for r in d["referrals"]],
            annotations_used=[BBox.from_dict(b) for b in d["annotations_used"]],
        )


def compute_referrals(
    detections: Sequence[Detection],
    annotations: Sequence[BBox],
    image_id: str = "",
) -> ReferralSet:
    """Filter suppressed detections down to those overlapping no annotation.

    Input must already be zero-overlap suppressed (re-running suppression
    would be a no-op); anything else is rejected rather than silently fixed.
    Referrals come back in descending confidence order.
    """
    if not is_suppressed(detections):
        raise UnsuppressedInputError("detections contain overlapping pairs; run suppression first")
    referrals = [d for d in detections if not any(overlaps(d.box, r) for r in annotations)]
    referrals.sort(key=Detection.sort_key)
    return ReferralSet(image_id=image_id, referrals=referrals, annotations_used=list(annotations))


def referral_pipeline(
    raw_detections: Sequence[Detection],
    annotations: Sequence[BBox],
    gate: Optional[str] = None,
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
    image_id: str = "",
) -> ReferralSet:
    """Full per-image path: normalcy gate, confidence floor, NMS, comparison.

    A "normal" gate verdict short-circuits to an empty referral set; any other
    verdict (including unavailable) runs the full path - the gate only ever
    blocks, it never adds referrals, and gate failures must not cost misses.
    """
    if gate == GATE_NORMAL:
        return ReferralSet(image_id=image_id, referrals=[], annotations_used=list(annotations))
    floored = [d for d in raw_detections if d.confidence >= confidence_floor]
    suppressed = suppress_zero_overlap(floored)
    return compute_referrals(suppressed, annotations, image_id=image_id)
