"""Simulated perceptual-miss dataset construction.

Each abnormal case's reader boxes are fused to one representative box per
lesion; then, in an exact seeded fraction of the abnormal cases (default
30%), one fused box is removed and recorded as the ground-truth miss the
referral step must recover. Selection counts are exact (round(fraction * N),
not Bernoulli) so runs are reproducible and testable.

All randomness goes through named substreams (see _rng): case selection uses
one stream, and each case's box choice uses a stream keyed by its image_id,
so adding or removing cases never perturbs the draws of unrelated cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ._jsonio import round_half_up
from ._rng import substream
from .errors import InvalidConfigError, NoAbnormalCasesError, UnknownImageError
from .fusion import DEFAULT_FUSION_IOU, FusedAnnotation, fuse
from .ingestion import CaseRecord

DEFAULT_MISS_FRACTION = 0.30


@dataclass(frozen=True)
class SimulationConfig:
    fraction: float = DEFAULT_MISS_FRACTION
    fusion_threshold: float = DEFAULT_FUSION_IOU
    seed: int = 0
    min_boxes_for_removal: int = 1

    def to_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "fusion_threshold": self.fusion_threshold,
            "seed": self.seed,
            "min_boxes_for_removal": self.min_boxes_for_removal,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        return cls(
            fraction=float(d["fraction"]),
            fusion_threshold=float(d["fusion_threshold"]),
            seed=int(d["seed"]),
            min_boxes_for_removal=int(d.get("min_boxes_for_removal", 1)),
        )


@dataclass(frozen=True)
class MissRecord:
    """Ground truth for one simulated miss: the fused box removed from a case."""

    image_id: str
    removed_box: FusedAnnotation
    seed: int
    draw_index: int

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "removed_box": self.removed_box.to_dict(),
            "seed": self.seed,
            "draw_index": self.draw_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MissRecord":
        return cls(
            image_id=d["image_id"],
            removed_box=FusedAnnotation.from_dict(d["removed_box"]),
            seed=int(d["seed"]),
            draw_index=int(d["draw_index"]),
        )


@dataclass
class ErrorCase:
    """One image as the simulated reader leaves it: fused boxes minus any removal."""

    image_id: str
    presented: list[FusedAnnotation] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"image_id": self.image_id, "presented": [f.to_dict() for f in self.presented]}

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorCase":
        return cls(
            image_id=d["image_id"],
            presented=[FusedAnnotation.from_dict(f) for f in d["presented"]],
        )


@dataclass
class ErrorDataset:
    """Interchange artifact consumed by the referral and evaluation stages."""

    cases: list[ErrorCase]
    misses: list[MissRecord]
    config: SimulationConfig

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "cases": [c.to_dict() for c in self.cases],
            "misses": [m.to_dict() for m in self.misses],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorDataset":
        return cls(
            cases=[ErrorCase.from_dict(c) for c in d["cases"]],
            misses=[MissRecord.from_dict(m) for m in d["misses"]],
            config=SimulationConfig.from_dict(d["config"]),
        )

    def case_ids(self) -> set[str]:
        return {c.image_id for c in self.cases}

    def misses_by_image(self) -> dict[str, list[MissRecord]]:
        out: dict[str, list[MissRecord]] = {}
        for m in self.misses:
            out.setdefault(m.image_id, []).append(m)
        return out

    def ground_truth(self, image_id: str) -> list[FusedAnnotation]:
        """Full fused set for a case: presented boxes plus any removed one."""
        by_id = {c.image_id: c for c in self.cases}
        if image_id not in by_id:
            raise UnknownImageError(image_id)
        boxes = list(by_id[image_id].presented)
        boxes += [m.removed_box for m in self.misses if m.image_id == image_id]
        boxes.sort(key=lambda f: f.box.coords)
        return boxes


def simulate_from_fused(
    fused_by_image: dict[str, list[FusedAnnotation]],
    config: SimulationConfig,
) -> ErrorDataset:
    """Core removal step over already-fused cases (keyed by image_id)."""
    abnormal_ids = sorted(i for i, boxes in fused_by_image.items() if boxes)
    if not abnormal_ids:
        raise NoAbnormalCasesError("simulation needs at least one abnormal case")

    eligible = [i for i in abnormal_ids if len(fused_by_image[i]) >= config.min_boxes_for_removal]
    n_altered = round_half_up(config.fraction * len(eligible))
    order = substream(config.seed, "case-selection").permutation(len(eligible))
    selected = [eligible[k] for k in order[:n_altered]]

    misses: list[MissRecord] = []
    removed_index: dict[str, int] = {}
    for draw_index, image_id in enumerate(selected):
        boxes = fused_by_image[image_id]  # already canonically sorted by fuse()
        pick = int(substream(config.seed, "box-removal", image_id).integers(0, len(boxes)))
        removed_index[image_id] = pick
        misses.append(
            MissRecord(image_id=image_id, removed_box=boxes[pick], seed=config.seed, draw_index=draw_index)
        )

    cases = []
    for image_id in sorted(fused_by_image):
        presented = [
            b for k, b in enumerate(fused_by_image[image_id]) if k != removed_index.get(image_id, -1)
        ]
        cases.append(ErrorCase(image_id=image_id, presented=presented))

    misses.sort(key=lambda m: m.image_id)
    return ErrorDataset(cases=cases, misses=misses, config=config)


def simulate(
    cases: Sequence[CaseRecord],
    fraction: float = DEFAULT_MISS_FRACTION,
    seed: int = 0,
    fusion_threshold: float = DEFAULT_FUSION_IOU,
    min_boxes_for_removal: int = 1,
) -> ErrorDataset:
    """Fuse every case's annotations, then remove one box in the seeded fraction.

    Normal cases pass through untouched. Single-box cases are eligible by
    default (removal leaves an empty, normal-looking annotation set); raise
    ``min_boxes_for_removal`` to exclude them.
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidConfigError(f"removal fraction must be in (0,1): {fraction}")
    config = SimulationConfig(
        fraction=fraction,
        fusion_threshold=fusion_threshold,
        seed=seed,
        min_boxes_for_removal=min_boxes_for_removal,
    )
    fused_by_image = {c.image_id: fuse(c.annotations, fusion_threshold) for c in cases}
    return simulate_from_fused(fused_by_image, config)
