"""Scoring referral output against a simulated-miss dataset.

Outcome vocabulary, counted per item rather than per image where noted:

* true referral (tr): a referred detection matched to a simulated miss,
  one per matched miss.
* false referral (fr): a referred detection matching no miss, one per
  referral.
* failed detection (fd): a simulated miss no referral matched, one per miss.
* true pass (td): an image with no simulated miss and no referrals, one per
  such image.

Matching within an image is greedy one-to-one by descending IoU between the
removed box and the referred box; a pair is eligible when its IoU exceeds
``match_threshold`` (default 0, so any positive overlap can match). Ties are
broken by canonical box order so classification is deterministic.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .differential import ReferralSet
from .errors import InvalidConfigError, NoMatchesError, UnknownImageError
from .geometry import BBox, iou
from .simulation import ErrorDataset, MissRecord
from .suppression import Detection


@dataclass(frozen=True)
class Match:
    """A referred detection paired with the simulated miss it recovered."""

    image_id: str
    miss_box: BBox
    referral: Detection
    iou: float

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "miss_box": self.miss_box.to_dict(),
            "referral": self.referral.to_dict(),
            "iou": self.iou,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Match":
        return cls(
            image_id=d["image_id"],
            miss_box=BBox.from_dict(d["miss_box"]),
            referral=Detection.from_dict(d["referral"]),
            iou=float(d["iou"]),
        )


@dataclass(frozen=True)
class FalseReferral:
    image_id: str
    referral: Detection

    def to_dict(self) -> dict:
        return {"image_id": self.image_id, "referral": self.referral.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "FalseReferral":
        return cls(image_id=d["image_id"], referral=Detection.from_dict(d["referral"]))


@dataclass(frozen=True)
class OutcomeCounts:
    tr: int
    fr: int
    fd: int
    td: int

    def to_dict(self) -> dict:
        return {"tr": self.tr, "fr": self.fr, "fd": self.fd, "td": self.td}

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeCounts":
        return cls(tr=int(d["tr"]), fr=int(d["fr"]), fd=int(d["fd"]), td=int(d["td"]))


@dataclass(frozen=True)
class OutcomeLedger:
    """Full classification: itemized outcomes plus the authoritative counts."""

    matches: tuple[Match, ...]
    unmatched_misses: tuple[MissRecord, ...]
    false_referrals: tuple[FalseReferral, ...]
    quiet_clean_images: tuple[str, ...]
    match_threshold: float = 0.0

    @property
    def counts(self) -> OutcomeCounts:
        return OutcomeCounts(
            tr=len(self.matches),
            fr=len(self.false_referrals),
            fd=len(self.unmatched_misses),
            td=len(self.quiet_clean_images),
        )

    def to_dict(self) -> dict:
        return {
            "match_threshold": self.match_threshold,
            "counts": self.counts.to_dict(),
            "matches": [m.to_dict() for m in self.matches],
            "unmatched_misses": [m.to_dict() for m in self.unmatched_misses],
            "false_referrals": [f.to_dict() for f in self.false_referrals],
            "quiet_clean_images": list(self.quiet_clean_images),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeLedger":
        return cls(
            matches=tuple(Match.from_dict(m) for m in d["matches"]),
            unmatched_misses=tuple(MissRecord.from_dict(m) for m in d["unmatched_misses"]),
            false_referrals=tuple(FalseReferral.from_dict(f) for f in d["false_referrals"]),
            quiet_clean_images=tuple(d["quiet_clean_images"]),
            match_threshold=float(d.get("match_threshold", 0.0)),
        )


def _match_one_image(
    image_id: str,
    misses: Sequence[MissRecord],
    referrals: Sequence[Detection],
    match_threshold: float,
) -> tuple[list[Match], list[MissRecord], list[FalseReferral]]:
    pairs = []
    for mi, miss in enumerate(misses):
        miss_box = miss.removed_box.box
        for ri, ref in enumerate(referrals):
            overlap = iou(miss_box, ref.box)
            if overlap > match_threshold:
                pairs.append((-overlap, miss_box.coords, ref.box.coords, mi, ri))
    pairs.sort()

    used_misses: set[int] = set()
    used_refs: set[int] = set()
    matches = []
    for neg_overlap, _, _, mi, ri in pairs:
        if mi in used_misses or ri in used_refs:
            continue
        used_misses.add(mi)
        used_refs.add(ri)
        matches.append(
            Match(
                image_id=image_id,
                miss_box=misses[mi].removed_box.box,
                referral=referrals[ri],
                iou=-neg_overlap,
            )
        )

    leftovers = [m for i, m in enumerate(misses) if i not in used_misses]
    falses = [FalseReferral(image_id=image_id, referral=r) for i, r in enumerate(referrals) if i not in used_refs]
    return matches, leftovers, falses


def classify_outcomes(
    referral_sets: Sequence[ReferralSet],
    dataset: ErrorDataset,
    match_threshold: float = 0.0,
) -> OutcomeLedger:
    """Classify every dataset case; absent referral sets count as zero referrals.

    Referral sets for images outside the dataset are an error rather than a
    silent skip, as are duplicate sets for one image.
    """
    known = set(dataset.case_ids())
    by_image: dict[str, ReferralSet] = {}
    for rs in referral_sets:
        if rs.image_id not in known:
            raise UnknownImageError(f"referral set for unknown image {rs.image_id!r}")
        if rs.image_id in by_image:
            raise InvalidConfigError(f"duplicate referral set for image {rs.image_id!r}")
        by_image[rs.image_id] = rs

    misses_by_image = dataset.misses_by_image()
    matches: list[Match] = []
    unmatched: list[MissRecord] = []
    falses: list[FalseReferral] = []
    quiet_clean: list[str] = []

    for image_id in sorted(known):
        misses = misses_by_image.get(image_id, [])
        rs = by_image.get(image_id)
        referrals = list(rs.referrals) if rs is not None else []
        got, left, bad = _match_one_image(image_id, misses, referrals, match_threshold)
        matches.extend(got)
        unmatched.extend(left)
        falses.extend(bad)
        if not misses and not referrals:
            quiet_clean.append(image_id)

    return OutcomeLedger(
        matches=tuple(matches),
        unmatched_misses=tuple(unmatched),
        false_referrals=tuple(falses),
        quiet_clean_images=tuple(quiet_clean),
        match_threshold=match_threshold,
    )


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    flags: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "flags": list(self.flags),
        }


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def compute_metrics(counts: OutcomeCounts) -> Metrics:
    """Precision/recall/f1/accuracy; zero denominators score 0.0 and raise a flag."""
    flags = []
    if counts.tr + counts.fr == 0:
        precision = 0.0
        flags.append("no-referrals")
    else:
        precision = counts.tr / (counts.tr + counts.fr)
    if counts.tr + counts.fd == 0:
        recall = 0.0
        flags.append("no-misses")
    else:
        recall = counts.tr / (counts.tr + counts.fd)
    total = counts.tr + counts.fr + counts.fd + counts.td
    if total == 0:
        accuracy = 0.0
        flags.append("no-cases")
    else:
        accuracy = (counts.tr + counts.td) / total
    return Metrics(
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        accuracy=accuracy,
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class IouStatistics:
    median: float
    fraction_above_half: float
    cdf: tuple[tuple[float, float], ...]  # (threshold, fraction of matches <= threshold)

    def to_dict(self) -> dict:
        return {
            "median": self.median,
            "fraction_above_half": self.fraction_above_half,
            "cdf": [[t, f] for t, f in self.cdf],
        }


def iou_statistics(matches: Sequence[Match]) -> IouStatistics:
    """Distribution of match IoUs; thresholds step by 0.05 from 0 to 1."""
    if not matches:
        raise NoMatchesError("no matches to summarize")
    values = [m.iou for m in matches]
    cdf = []
    for i in range(21):
        threshold = i / 20
        cdf.append((threshold, sum(1 for v in values if v <= threshold) / len(values)))
    return IouStatistics(
        median=float(statistics.median(values)),
        fraction_above_half=sum(1 for v in values if v > 0.5) / len(values),
        cdf=tuple(cdf),
    )


# --- standalone detector scoring ---------------------------------------------


@dataclass(frozen=True)
class DetectorEvaluation:
    average_precision: float
    precision_at_floor: float
    recall_at_floor: float
    confidence_floor: float
    iou_threshold: float
    true_positives: int
    false_positives: int
    ground_truth_total: int
    flags: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "average_precision": self.average_precision,
            "precision_at_floor": self.precision_at_floor,
            "recall_at_floor": self.recall_at_floor,
            "confidence_floor": self.confidence_floor,
            "iou_threshold": self.iou_threshold,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "ground_truth_total": self.ground_truth_total,
            "flags": list(self.flags),
        }


def evaluate_detector(
    detections_by_image: dict[str, Sequence[Detection]],
    ground_truth_by_image: dict[str, Sequence[BBox]],
    iou_threshold: float = 0.5,
    confidence_floor: float = 0.25,
) -> DetectorEvaluation:
    """Single-class detector scoring: pooled greedy matching plus all-point AP.

    Detections from every image are ranked together by descending confidence
    (ties by image then canonical box order) and matched greedily, each to the
    unused ground-truth box in its image with the highest IoU at or above
    ``iou_threshold``. Average precision integrates the precision envelope
    over recall across all ranks; the floor metrics reuse the same greedy
    pass truncated at ``confidence_floor``.
    """
    pooled = []
    for image_id in sorted(detections_by_image):
        if image_id not in ground_truth_by_image:
            raise UnknownImageError(f"detections for image without ground truth: {image_id!r}")
        for det in detections_by_image[image_id]:
            pooled.append((-det.confidence, image_id, det.box.coords, det.label or "", det))
    pooled.sort(key=lambda t: t[:4])

    gt_total = sum(len(boxes) for boxes in ground_truth_by_image.values())
    used: dict[str, set[int]] = {image_id: set() for image_id in ground_truth_by_image}

    hits: list[bool] = []
    confidences: list[float] = []
    for _, image_id, _, _, det in pooled:
        best = None
        for gi, gt_box in enumerate(ground_truth_by_image[image_id]):
            if gi in used[image_id]:
                continue
            overlap = iou(det.box, gt_box)
            if overlap < iou_threshold:
                continue
            key = (-overlap, gt_box.coords)
            if best is None or key < best[0]:
                best = (key, gi)
        if best is not None:
            used[image_id].add(best[1])
            hits.append(True)
        else:
            hits.append(False)
        confidences.append(det.confidence)

    flags = []
    if gt_total == 0:
        flags.append("no-ground-truth")
    if not hits:
        flags.append("no-detections")

    # All-point interpolated AP: area under the precision envelope over recall.
    ap = 0.0
    if gt_total > 0 and hits:
        precisions = []
        recalls = []
        tp_running = 0
        for rank, hit in enumerate(hits, start=1):
            tp_running += int(hit)
            precisions.append(tp_running / rank)
            recalls.append(tp_running / gt_total)
        envelope = list(precisions)
        for i in range(len(envelope) - 2, -1, -1):
            envelope[i] = max(envelope[i], envelope[i + 1])
        previous_recall = 0.0
        for recall_value, precision_value in zip(recalls, envelope):
            ap += (recall_value - previous_recall) * precision_value
            previous_recall = recall_value

    floored_hits = [h for h, c in zip(hits, confidences) if c >= confidence_floor]
    tp_floor = sum(floored_hits)
    fp_floor = len(floored_hits) - tp_floor
    precision_at_floor = tp_floor / len(floored_hits) if floored_hits else 0.0
    recall_at_floor = tp_floor / gt_total if gt_total else 0.0
    if not floored_hits:
        flags.append("no-detections-at-floor")

    return DetectorEvaluation(
        average_precision=ap,
        precision_at_floor=precision_at_floor,
        recall_at_floor=recall_at_floor,
        confidence_floor=confidence_floor,
        iou_threshold=iou_threshold,
        true_positives=tp_floor,
        false_positives=fp_floor,
        ground_truth_total=gt_total,
        flags=tuple(sorted(set(flags))),
    )


def summary_table(ledger: OutcomeLedger, metrics: Metrics) -> str:
    """Fixed-width text summary for terminal output."""
    counts = ledger.counts
    lines = [
        "outcome            count",
        "-----------------  -----",
        f"true referrals     {counts.tr:5d}",
        f"false referrals    {counts.fr:5d}",
        f"failed detections  {counts.fd:5d}",
        f"quiet clean images {counts.td:5d}",
        "",
        f"precision {metrics.precision:.4f}  recall {metrics.recall:.4f}  "
        f"f1 {metrics.f1:.4f}  accuracy {metrics.accuracy:.4f}",
    ]
    if metrics.flags:
        lines.append("flags: " + ", ".join(metrics.flags))
    return "\n".join(lines) + "\n"
