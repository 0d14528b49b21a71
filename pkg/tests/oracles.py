"""Independent brute-force oracles the fast implementations are checked against.

Everything here trades speed for obviousness: rasterized pixel counting,
subset enumeration, exhaustive assignment search. None of it imports the
algorithms under test beyond the plain data types.
"""

from __future__ import annotations

import itertools
import math
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

import numpy as np

from secondlook import BBox, Detection
from secondlook.simulation import MissRecord


def rasterized_iou(a: BBox, b: BBox, cell: float = 1.0) -> float:
    """IoU by counting grid cells whose centers fall inside each box.

    Exact for integer-coordinate boxes with cell=1: a unit pixel's center is
    in the box iff the pixel is covered. Membership in an axis-aligned box is
    separable, so counts are per-axis sums multiplied together; the union
    count follows by inclusion-exclusion. No coordinate min/max arithmetic.
    """
    x_lo = math.floor(min(a.x_min, b.x_min))
    y_lo = math.floor(min(a.y_min, b.y_min))
    x_hi = math.ceil(max(a.x_max, b.x_max))
    y_hi = math.ceil(max(a.y_max, b.y_max))
    xs = np.arange(x_lo, x_hi, cell) + cell / 2
    ys = np.arange(y_lo, y_hi, cell) + cell / 2

    ax = (xs > a.x_min) & (xs < a.x_max)
    ay = (ys > a.y_min) & (ys < a.y_max)
    bx = (xs > b.x_min) & (xs < b.x_max)
    by = (ys > b.y_min) & (ys < b.y_max)

    count_a = int(ax.sum()) * int(ay.sum())
    count_b = int(bx.sum()) * int(by.sum())
    count_ab = int((ax & bx).sum()) * int((ay & by).sum())
    union = count_a + count_b - count_ab
    if union == 0:
        return 0.0
    return count_ab / union


def decimal_round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def _pairwise_disjoint(dets: Sequence[Detection]) -> bool:
    for i in range(len(dets)):
        for j in range(i + 1, len(dets)):
            a, b = dets[i].box, dets[j].box
            ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
            iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
            if ix > 0 and iy > 0:
                return False
    return True


def subset_nms(dets: Sequence[Detection]) -> list[Detection]:
    """Zero-overlap suppression by subset enumeration (<=~10 boxes).

    Greedy keep-the-best suppression always yields a maximal pairwise-disjoint
    subset; among all such subsets it is the one whose members rank earliest
    in priority order (descending confidence with deterministic tie-breaks).
    Enumerating every subset and picking the lexicographically smallest rank
    sequence therefore reproduces the greedy result without running it.
    """
    ranked = sorted(dets, key=Detection.sort_key)
    n = len(ranked)
    best_ranks: Optional[tuple[int, ...]] = None
    for bits in range(1 << n):
        chosen = [ranked[i] for i in range(n) if bits >> i & 1]
        if not _pairwise_disjoint(chosen):
            continue
        maximal = all(
            not _pairwise_disjoint(chosen + [ranked[i]]) for i in range(n) if not bits >> i & 1
        )
        if not maximal:
            continue
        ranks = tuple(i for i in range(n) if bits >> i & 1)
        if best_ranks is None or ranks < best_ranks:
            best_ranks = ranks
    if best_ranks is None:  # only possible for empty input
        return []
    return [ranked[i] for i in best_ranks]


def double_loop_referrals(dets: Sequence[Detection], annotations: Sequence[BBox]) -> list[Detection]:
    """Referral filter straight from the definition: max IoU over annotations is 0."""
    out = []
    for det in dets:
        best = 0.0
        for ann in annotations:
            ix = min(det.box.x_max, ann.x_max) - max(det.box.x_min, ann.x_min)
            iy = min(det.box.y_max, ann.y_max) - max(det.box.y_min, ann.y_min)
            if ix > 0 and iy > 0:
                inter = ix * iy
                area_d = (det.box.x_max - det.box.x_min) * (det.box.y_max - det.box.y_min)
                area_a = (ann.x_max - ann.x_min) * (ann.y_max - ann.y_min)
                best = max(best, inter / (area_d + area_a - inter))
        if best == 0.0:
            out.append(det)
    return sorted(out, key=Detection.sort_key)


def _plain_iou(a: BBox, b: BBox) -> float:
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min)
    area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min)
    return inter / (area_a + area_b - inter)


def exhaustive_assignment(
    misses: Sequence[MissRecord],
    referrals: Sequence[Detection],
    match_threshold: float = 0.0,
) -> tuple[int, float]:
    """Best (match count, total IoU) over every one-to-one assignment.

    Feasible pairs need IoU strictly above the threshold. Intended for tiny
    per-image instances (<=4 x 4); complexity is factorial.
    """
    iou_table = [
        [_plain_iou(m.removed_box.box, r.box) for r in referrals] for m in misses
    ]
    best = (0, 0.0)
    ref_indices = range(len(referrals))
    for k in range(0, min(len(misses), len(referrals)) + 1):
        for miss_subset in itertools.combinations(range(len(misses)), k):
            for ref_perm in itertools.permutations(ref_indices, k):
                total = 0.0
                count = 0
                feasible = True
                for mi, ri in zip(miss_subset, ref_perm):
                    value = iou_table[mi][ri]
                    if value <= match_threshold:
                        feasible = False
                        break
                    total += value
                    count += 1
                if feasible and (count, total) > best:
                    best = (count, total)
    return best


def all_point_ap(hits: Sequence[bool], ground_truth_total: int) -> float:
    """AP as (1/GT) * sum over true-positive ranks of the best precision at or after that rank."""
    if ground_truth_total == 0 or not hits:
        return 0.0
    precisions = []
    tp = 0
    for rank, hit in enumerate(hits, start=1):
        tp += int(hit)
        precisions.append(tp / rank)
    ap = 0.0
    for i, hit in enumerate(hits):
        if hit:
            ap += max(precisions[i:])
    return ap / ground_truth_total
