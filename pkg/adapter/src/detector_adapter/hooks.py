"""Model hooks: the single seam a concrete detector plugs into.

A hook reports its native coordinate frame and maps one image payload to raw
boxes with scores in that frame. The server owns everything after that
(rescaling, clamping, validation), so hooks stay free of wire concerns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Sequence


@dataclass(frozen=True)
class RawBox:
    """One model-space detection as the underlying model emitted it."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    score: float
    label: Optional[str] = None


class ModelHook(Protocol):
    model_frame: tuple[float, float]

    def infer(
        self, image_id: str, image_data: Optional[bytes], image_ref: Optional[str]
    ) -> Sequence[RawBox]:
        """Raw detections for one image; raise LookupError for unknown ids."""
        ...


class StaticHook:
    """Replays fixture boxes per image id; the reference hook for tests and demos."""

    def __init__(self, boxes_by_image: dict[str, list[dict]], model_frame: tuple[float, float] = (640.0, 640.0)):
        self.model_frame = (float(model_frame[0]), float(model_frame[1]))
        self._boxes = {
            image_id: [
                RawBox(
                    x_min=float(b["x_min"]),
                    y_min=float(b["y_min"]),
                    x_max=float(b["x_max"]),
                    y_max=float(b["y_max"]),
                    score=float(b["score"]),
                    label=b.get("label"),
                )
                for b in items
            ]
            for image_id, items in boxes_by_image.items()
        }

    @classmethod
    def from_manifest(cls, doc: dict) -> "StaticHook":
        frame = doc.get("model_frame", [640, 640])
        return cls(doc["images"], model_frame=(frame[0], frame[1]))

    def infer(
        self, image_id: str, image_data: Optional[bytes], image_ref: Optional[str]
    ) -> Sequence[RawBox]:
        if image_id not in self._boxes:
            raise LookupError(image_id)
        return self._boxes[image_id]
