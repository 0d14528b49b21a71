"""Annotation-table ingestion: parse, rescale to the 1024x1024 frame, split.

Input is a UTF-8 CSV with a header row and columns ``image_id, class_name,
rad_id, x_min, y_min, x_max, y_max`` (order irrelevant, extra columns
ignored), plus a sidecar CSV ``image_id, width, height`` giving each image's
original pixel dimensions. Rows whose class is "No finding" carry null
coordinates (empty fields or "NaN") and mark the image as normal. Malformed
rows are collected into a rejects report, never silently dropped.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ._jsonio import round_half_up
from ._rng import shuffled
from .errors import InvalidBoxError, MissingColumnError, NoAbnormalCasesError
from .geometry import CANONICAL_FRAME, BBox

NO_FINDING = "No finding"

# The 14 abnormality classes of the source annotation vocabulary, plus the
# class-agnostic tag used when findings are collapsed into a single class.
ABNORMALITY_CLASSES = (
    "Aortic enlargement",
    "Atelectasis",
    "Calcification",
    "Cardiomegaly",
    "Consolidation",
    "ILD",
    "Infiltration",
    "Lung Opacity",
    "Nodule/Mass",
    "Other lesion",
    "Pleural effusion",
    "Pleural thickening",
    "Pneumothorax",
    "Pulmonary fibrosis",
)
ANY_ABNORMALITY = "abnormal"

REQUIRED_COLUMNS = ("image_id", "class_name", "rad_id", "x_min", "y_min", "x_max", "y_max")


@dataclass(frozen=True)
class ReaderAnnotation:
    """One reader's box in the canonical frame."""

    box: BBox
    label: Optional[str] = None
    reader_id: Optional[str] = None

    def to_dict(self) -> dict:
        d = self.box.to_dict()
        if self.label is not None:
            d["label"] = self.label
        if self.reader_id is not None:
            d["reader_id"] = self.reader_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReaderAnnotation":
        return cls(box=BBox.from_dict(d), label=d.get("label"), reader_id=d.get("reader_id"))


@dataclass
class CaseRecord:
    """All annotations for one image, rescaled to the canonical frame."""

    image_id: str
    original_width: float
    original_height: float
    annotations: list[ReaderAnnotation] = field(default_factory=list)

    @property
    def is_normal(self) -> bool:
        return not self.annotations


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str
    detail: str

    def to_dict(self) -> dict:
        return {"line": self.line, "reason": self.reason, "detail": self.detail}


@dataclass
class ParseResult:
    cases: list[CaseRecord]
    rejects: list[RejectedRow]


@dataclass
class SplitManifest:
    """Seeded, stratified 80/20/20 partition of the selected dataset."""

    seed: int
    train: list[str]
    validation: list[str]
    test: list[str]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "train": sorted(self.train),
            "validation": sorted(self.validation),
            "test": sorted(self.test),
        }


def rescale(
    box: BBox,
    from_dims: tuple[float, float],
    to_dims: tuple[float, float] = CANONICAL_FRAME,
) -> BBox:
    """Scale box coordinates between image frames; inverse of the reverse call.

    Coordinates overshooting the source frame are clamped to it first (public
    annotation tables contain slight overshoot); a box that collapses under
    clamping is rejected.
    """
    w, h = from_dims
    if w <= 0 or h <= 0:
        raise InvalidBoxError(f"source dimensions must be positive: {from_dims}")
    x_min = min(max(box.x_min, 0.0), w)
    x_max = min(max(box.x_max, 0.0), w)
    y_min = min(max(box.y_min, 0.0), h)
    y_max = min(max(box.y_max, 0.0), h)
    if x_min >= x_max or y_min >= y_max:
        raise InvalidBoxError(f"degenerate-after-clamp: {box.coords} in {from_dims}")
    sx = to_dims[0] / w
    sy = to_dims[1] / h
    return BBox(x_min * sx, y_min * sy, x_max * sx, y_max * sy)


def _parse_coord(raw: str) -> Optional[float]:
    raw = (raw or "").strip()
    if raw == "" or raw.lower() == "nan":
        return None
    return float(raw)


def read_dimensions(path: str | Path) -> dict[str, tuple[float, float]]:
    """Load the (image_id, width, height) sidecar table."""
    dims: dict[str, tuple[float, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("image_id", "width", "height") if c not in (reader.fieldnames or [])]
        if missing:
            raise MissingColumnError(f"dimensions table lacks columns: {missing}")
        for row in reader:
            dims[row["image_id"]] = (float(row["width"]), float(row["height"]))
    return dims


def parse_annotations(
    table_path: str | Path,
    dimensions: dict[str, tuple[float, float]],
) -> ParseResult:
    """Build one CaseRecord per image_id; boxes land in the canonical frame.

    A row is rejected (with a reason) when its coordinates are unparseable,
    partially null, degenerate, or when the image has no known dimensions.
    "No finding" rows contribute no boxes; an image whose rows are all
    "No finding" is a normal case.
    """
    cases: dict[str, CaseRecord] = {}
    rejects: list[RejectedRow] = []

    with open(table_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise MissingColumnError(f"annotation table lacks columns: {missing}")

        for line_no, row in enumerate(reader, start=2):  # header is line 1
            image_id = (row["image_id"] or "").strip()
            if not image_id:
                rejects.append(RejectedRow(line_no, "unparseable-row", "empty image_id"))
                continue
            if image_id not in dimensions:
                rejects.append(RejectedRow(line_no, "unknown-image-dimensions", image_id))
                continue

            case = cases.get(image_id)
            if case is None:
                w, h = dimensions[image_id]
                case = cases[image_id] = CaseRecord(image_id, w, h)

            try:
                coords = [_parse_coord(row[c]) for c in ("x_min", "y_min", "x_max", "y_max")]
            except ValueError as exc:
                rejects.append(RejectedRow(line_no, "unparseable-row", str(exc)))
                continue

            label = (row["class_name"] or "").strip()
            if all(c is None for c in coords):
                if label and label.lower() != NO_FINDING.lower():
                    rejects.append(RejectedRow(line_no, "unparseable-row", f"null coordinates for '{label}'"))
                continue  # normal-case marker row
            if any(c is None for c in coords):
                rejects.append(RejectedRow(line_no, "unparseable-row", "partially null coordinates"))
                continue

            try:
                raw_box = BBox(*coords)
                canonical = rescale(raw_box, dimensions[image_id])
            except InvalidBoxError as exc:
                rejects.append(RejectedRow(line_no, "invalid-box", str(exc)))
                continue

            case.annotations.append(
                ReaderAnnotation(box=canonical, label=label or None, reader_id=(row["rad_id"] or "").strip() or None)
            )

    ordered = [cases[k] for k in sorted(cases)]
    return ParseResult(cases=ordered, rejects=rejects)


def _allocate(total: int, stratum_sizes: dict[str, int]) -> dict[str, int]:
    """Largest-remainder apportionment of `total` across strata (deterministic ties)."""
    n = sum(stratum_sizes.values())
    quotas = {s: total * size / n for s, size in stratum_sizes.items()}
    counts = {s: int(q) for s, q in quotas.items()}
    leftover = total - sum(counts.values())
    by_remainder = sorted(stratum_sizes, key=lambda s: (-(quotas[s] - counts[s]), s))
    for s in by_remainder[:leftover]:
        counts[s] += 1
    return counts


def balance_and_split(cases: Sequence[CaseRecord], seed: int) -> SplitManifest:
    """Class-balanced selection plus stratified 80/20 test then 80/20 validation split.

    Keeps every abnormal case and a seeded random sample of normals of equal
    count (all of them, with a warning, when normals are scarce). Test gets
    round(0.20*N) cases and validation round(0.20 * remaining), allocated
    across the abnormal/normal strata so each split stays within one case of
    the 1:1 balance.
    """
    abnormal = sorted(c.image_id for c in cases if not c.is_normal)
    normal = sorted(c.image_id for c in cases if c.is_normal)
    if not abnormal:
        raise NoAbnormalCasesError("balance_and_split needs at least one abnormal case")

    if len(normal) < len(abnormal):
        warnings.warn(
            f"insufficient-normals: only {len(normal)} normal cases for {len(abnormal)} abnormal; taking all",
            stacklevel=2,
        )
        selected_normal = normal
    else:
        selected_normal = sorted(shuffled(seed, normal, "normal-sample")[: len(abnormal)])

    pools = {
        "abnormal": shuffled(seed, abnormal, "split-shuffle", "abnormal"),
        "normal": shuffled(seed, selected_normal, "split-shuffle", "normal"),
    }
    sizes = {s: len(p) for s, p in pools.items() if p}
    n_total = sum(sizes.values())

    test_total = round_half_up(0.20 * n_total)
    test_counts = _allocate(test_total, sizes)
    remaining_sizes = {s: sizes[s] - test_counts.get(s, 0) for s in sizes}
    val_total = round_half_up(0.20 * (n_total - test_total))
    val_counts = _allocate(val_total, remaining_sizes)

    test: list[str] = []
    validation: list[str] = []
    train: list[str] = []
    for s, pool in pools.items():
        t = test_counts.get(s, 0)
        v = val_counts.get(s, 0)
        test += pool[:t]
        validation += pool[t : t + v]
        train += pool[t + v :]

    return SplitManifest(seed=seed, train=sorted(train), validation=sorted(validation), test=sorted(test))
