"""Generate the committed toy dataset: 20 abnormal + 20 normal cases.

Layout guarantees the acceptance suite relies on:

* Each abnormal case has 1-4 lesion sites placed in separate quadrant cells
  with wide margins, so the per-site fused boxes are pairwise disjoint (zero
  IoU) in any frame. Replayed ground truth then survives zero-overlap
  suppression untouched, which the end-to-end identity check requires.
* Each site carries 2-3 reader boxes that mutually overlap well above the
  0.3 fusion threshold, so fusion collapses every site to exactly one box.
* Original image dimensions vary per case; the CSV stores original-pixel
  coordinates.

Rerunning this script reproduces the committed CSVs byte for byte.
"""

from __future__ import annotations

import csv
import itertools
from pathlib import Path

from secondlook import fuse, iou, parse_annotations, read_dimensions
from secondlook._rng import substream

SEED = 1105
OUT_DIR = Path(__file__).resolve().parent.parent / "data" / "toy"

DIMS_CYCLE = [(2048, 2560), (2304, 2880), (1920, 2400), (2560, 2560), (3000, 2500)]

# Quadrant cells in fraction-of-frame coordinates, separated by 0.10 gaps.
CELLS = [
    (0.05, 0.05, 0.45, 0.45),
    (0.55, 0.05, 0.95, 0.45),
    (0.05, 0.55, 0.45, 0.95),
    (0.55, 0.55, 0.95, 0.95),
]

LABELS = ["Nodule/Mass", "Lung Opacity", "Consolidation", "Pleural effusion", "Cardiomegaly"]
READERS = [f"R{i}" for i in range(1, 11)]


def make_site(rng, cell):
    """One base lesion box inside the cell, with margin for reader jitter."""
    x0, y0, x1, y1 = cell
    w = rng.uniform(0.16, 0.30)
    h = rng.uniform(0.16, 0.30)
    cx = rng.uniform(x0 + w / 2 + 0.04, x1 - w / 2 - 0.04)
    cy = rng.uniform(y0 + h / 2 + 0.04, y1 - h / 2 - 0.04)
    return cx, cy, w, h


def reader_variant(rng, site):
    """A single reader's take on the site: small shift and scale."""
    cx, cy, w, h = site
    dx = rng.uniform(-0.015, 0.015)
    dy = rng.uniform(-0.015, 0.015)
    sw = w * rng.uniform(0.90, 1.06)
    sh = h * rng.uniform(0.90, 1.06)
    return (cx + dx - sw / 2, cy + dy - sh / 2, cx + dx + sw / 2, cy + dy + sh / 2)


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    ann_rows = []
    dim_rows = []

    for i in range(1, 21):  # abnormal cases
        image_id = f"img-{i:03d}"
        width, height = DIMS_CYCLE[(i - 1) % len(DIMS_CYCLE)]
        dim_rows.append((image_id, width, height))
        rng = substream(SEED, "toy-case", image_id)

        n_sites = 1 + (i - 1) % 4
        cell_order = list(rng.permutation(len(CELLS)))[:n_sites]
        for cell_index in cell_order:
            site = make_site(rng, CELLS[cell_index])
            label = LABELS[int(rng.integers(0, len(LABELS)))]
            readers = list(rng.choice(READERS, size=int(rng.integers(2, 4)), replace=False))
            for reader in readers:
                fx0, fy0, fx1, fy1 = reader_variant(rng, site)
                ann_rows.append(
                    (
                        image_id,
                        label,
                        reader,
                        round(fx0 * width, 2),
                        round(fy0 * height, 2),
                        round(fx1 * width, 2),
                        round(fy1 * height, 2),
                    )
                )

    for i in range(21, 41):  # normal cases
        image_id = f"img-{i:03d}"
        width, height = DIMS_CYCLE[(i - 1) % len(DIMS_CYCLE)]
        dim_rows.append((image_id, width, height))
        rng = substream(SEED, "toy-case", image_id)
        reader = READERS[int(rng.integers(0, len(READERS)))]
        ann_rows.append((image_id, "No finding", reader, "", "", "", ""))

    with open(OUT_DIR / "annotations.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "class_name", "rad_id", "x_min", "y_min", "x_max", "y_max"])
        writer.writerows(ann_rows)

    with open(OUT_DIR / "dimensions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "width", "height"])
        writer.writerows(dim_rows)

    # Self-check: fusion collapses each site to one box and fused boxes are
    # pairwise disjoint within every case.
    dims = read_dimensions(OUT_DIR / "dimensions.csv")
    parsed = parse_annotations(OUT_DIR / "annotations.csv", dims)
    assert not parsed.rejects, parsed.rejects
    abnormal = [c for c in parsed.cases if not c.is_normal]
    normal = [c for c in parsed.cases if c.is_normal]
    assert len(abnormal) == 20 and len(normal) == 20, (len(abnormal), len(normal))
    total_sites = 0
    for case in abnormal:
        fused = fuse(case.annotations)
        expected_sites = 1 + (int(case.image_id.split("-")[1]) - 1) % 4
        assert len(fused) == expected_sites, (case.image_id, len(fused), expected_sites)
        total_sites += len(fused)
        for a, b in itertools.combinations(fused, 2):
            assert iou(a.box, b.box) == 0.0, (case.image_id, a.box, b.box)
    print(f"wrote {len(ann_rows)} rows, {total_sites} fused sites -> {OUT_DIR}")


if __name__ == "__main__":
    main()
