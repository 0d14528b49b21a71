"""Consolidate overlapping multi-reader boxes into one representative box per lesion.

Independent readers marking the same lesion produce stacks of mutually
overlapping boxes. Fusion merges them greedily: while any pair of current
boxes has IoU at or above the threshold (default 0.3), the pair with the
highest IoU is replaced by its hull. Merging runs to a fixpoint, so a grown
hull that newly clears the threshold against a third box merges again; each
overlapping cluster ends up as exactly one representative. The hull is used
(rather than an average) so the representative never excludes any part of a
reader's marking - it later serves as the ground-truth extent of a simulated
miss.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .errors import InvalidThresholdError
from .geometry import BBox, hull, iou

DEFAULT_FUSION_IOU = 0.3


class BoxWithLabel(Protocol):
    box: BBox
    label: Optional[str]


@dataclass(frozen=True)
class FusedAnnotation:
    """Representative box for one lesion cluster."""

    box: BBox
    source_count: int = 1
    labels: tuple[str, ...] = ()
    sources: tuple[BBox, ...] = field(default=())

    def to_dict(self) -> dict:
        d = self.box.to_dict()
        d["source_count"] = self.source_count
        d["labels"] = sorted(self.labels)
        d["sources"] = [s.to_dict() for s in self.sources]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FusedAnnotation":
        return cls(
            box=BBox.from_dict(d),
            source_count=int(d.get("source_count", 1)),
            labels=tuple(sorted(d.get("labels", []))),
            sources=tuple(BBox.from_dict(s) for s in d.get("sources", [])),
        )


@dataclass
class _Cluster:
    box: BBox
    labels: list[str]
    sources: list[BBox]


def fuse(items: Sequence[BoxWithLabel], threshold: float = DEFAULT_FUSION_IOU) -> list[FusedAnnotation]:
    """Merge overlapping boxes to a fixpoint; output pairs all have IoU < threshold.

    Merge order: always the currently most-overlapping pair; exact IoU ties are
    broken by the pair's concatenated coordinates so the result is invariant
    under input permutation. Labels are carried along as a multiset, never
    resolved to a single class.
    """
    if not 0.0 < threshold <= 1.0:
        raise InvalidThresholdError(f"fusion threshold must be in (0,1]: {threshold}")

    clusters = [
        _Cluster(box=it.box, labels=[it.label] if it.label else [], sources=[it.box]) for it in items
    ]

    while True:
        best: tuple | None = None  # (-iou, pair coords key, i, j)
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                value = iou(clusters[i].box, clusters[j].box)
                if value < threshold:
                    continue
                lo, hi = sorted((clusters[i].box.coords, clusters[j].box.coords))
                key = (-value, lo + hi, i, j)
                if best is None or key < best:
                    best = key
        if best is None:
            break
        _, _, i, j = best
        a, b = clusters[i], clusters[j]
        merged = _Cluster(
            box=hull([a.box, b.box]),
            labels=a.labels + b.labels,
            sources=a.sources + b.sources,
        )
        clusters = [c for k, c in enumerate(clusters) if k not in (i, j)]
        clusters.append(merged)

    fused = [
        FusedAnnotation(
            box=c.box,
            source_count=len(c.sources),
            labels=tuple(sorted(c.labels)),
            sources=tuple(sorted(c.sources, key=lambda s: s.coords)),
        )
        for c in clusters
    ]
    fused.sort(key=lambda f: f.box.coords)
    return fused
