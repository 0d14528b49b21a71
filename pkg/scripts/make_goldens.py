"""Freeze regression goldens for the toy dataset pipeline.

Each golden is only written after an independent in-script check passes:

* the seed-42 simulated error dataset (count arithmetic, conservation),
* the perturbed-replay referral run (sigma=8, one extra detection per image)
  whose outcome ledger is re-derived here by exhaustive per-image assignment
  and whose metrics are recomputed from the raw count formulas,
* the seed-7 case split (strata arithmetic).

Rerunning this script reproduces the committed goldens byte for byte.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT))

from secondlook import (  # noqa: E402
    BBox,
    CaseRecord,
    DetectorProviderConfig,
    ReaderAnnotation,
    SimulationConfig,
    balance_and_split,
    build_provider,
    classify_outcomes,
    compute_metrics,
    fuse,
    gate_normalcy,
    iou_statistics,
    parse_annotations,
    read_dimensions,
    referral_pipeline,
    simulate_from_fused,
)
from secondlook._jsonio import write_json  # noqa: E402
from tests.oracles import exhaustive_assignment  # noqa: E402

TOY_DIR = REPO_ROOT / "data" / "toy"
GOLDEN_DIR = REPO_ROOT / "tests" / "goldens"

SIM_SEED = 42
PROVIDER_CONFIG = {"kind": "jitter-oracle", "sigma": 8.0, "extras": 1, "drops": 0, "seed": 2024}
SPLIT_SEED = 7


def build_fused_doc() -> dict:
    dims = read_dimensions(TOY_DIR / "dimensions.csv")
    parsed = parse_annotations(TOY_DIR / "annotations.csv", dims)
    assert not parsed.rejects, parsed.rejects
    cases = []
    for case in parsed.cases:
        cases.append(
            {
                "image_id": case.image_id,
                "original_width": case.original_width,
                "original_height": case.original_height,
                "is_normal": case.is_normal,
                "fused": [f.to_dict() for f in fuse(case.annotations)],
            }
        )
    return {"fusion_threshold": 0.3, "cases": cases, "rejects": []}


def freeze_error_dataset(fused_doc: dict):
    from secondlook.fusion import FusedAnnotation

    by_image = {
        c["image_id"]: [FusedAnnotation.from_dict(f) for f in c["fused"]]
        for c in fused_doc["cases"]
    }
    dataset = simulate_from_fused(by_image, SimulationConfig(seed=SIM_SEED))
    assert len(dataset.cases) == 40
    assert len(dataset.misses) == 6, len(dataset.misses)
    for miss in dataset.misses:
        presented = {f.box.coords for c in dataset.cases if c.image_id == miss.image_id for f in c.presented}
        original = {f.box.coords for f in by_image[miss.image_id]}
        assert presented | {miss.removed_box.box.coords} == original
    write_json(GOLDEN_DIR / "error_seed42.json", dataset.to_dict())
    return dataset


def freeze_referrals(dataset) -> dict:
    config = DetectorProviderConfig.from_dict(PROVIDER_CONFIG)
    provider = build_provider(config, dataset=dataset)
    referral_sets = []
    for case in sorted(dataset.cases, key=lambda c: c.image_id):
        verdict = gate_normalcy(case.image_id, None)
        detections = provider.detections(case.image_id)
        referral_sets.append(
            referral_pipeline(
                detections,
                [f.box for f in case.presented],
                gate=verdict,
                confidence_floor=config.confidence_floor,
                image_id=case.image_id,
            )
        )
    doc = {
        "confidence_floor": config.confidence_floor,
        "provider": config.fingerprint(),
        "gate_configured": False,
        "referral_sets": [rs.to_dict() for rs in referral_sets],
    }
    write_json(GOLDEN_DIR / "referrals_sigma8.json", doc)
    return {rs.image_id: rs for rs in referral_sets}


def freeze_report(dataset, sets_by_image) -> None:
    referral_sets = [sets_by_image[c.image_id] for c in sorted(dataset.cases, key=lambda c: c.image_id)]
    ledger = classify_outcomes(referral_sets, dataset, match_threshold=0.0)
    counts = ledger.counts

    # Re-derive the ledger by brute force before trusting it.
    misses_by_image = dataset.misses_by_image()
    oracle_tr = 0
    oracle_iou = 0.0
    oracle_td = 0
    total_referrals = 0
    for case in dataset.cases:
        misses = misses_by_image.get(case.image_id, [])
        referrals = sets_by_image[case.image_id].referrals
        total_referrals += len(referrals)
        count, iou_total = exhaustive_assignment(misses, referrals, 0.0)
        oracle_tr += count
        oracle_iou += iou_total
        if not misses and not referrals:
            oracle_td += 1
    assert counts.tr == oracle_tr, (counts.tr, oracle_tr)
    assert counts.fr == total_referrals - oracle_tr
    assert counts.fd == len(dataset.misses) - oracle_tr
    assert counts.td == oracle_td
    assert math.isclose(sum(m.iou for m in ledger.matches), oracle_iou, abs_tol=1e-9)

    metrics = compute_metrics(counts)
    precision = counts.tr / (counts.tr + counts.fr)
    recall = counts.tr / (counts.tr + counts.fd)
    assert metrics.precision == precision
    assert metrics.recall == recall
    assert metrics.f1 == 2 * precision * recall / (precision + recall)
    assert metrics.accuracy == (counts.tr + counts.td) / (counts.tr + counts.fr + counts.fd + counts.td)

    report = {
        "match_threshold": 0.0,
        "counts": counts.to_dict(),
        "metrics": metrics.to_dict(),
        "iou_stats": iou_statistics(ledger.matches).to_dict(),
        "ledger": ledger.to_dict(),
    }
    write_json(GOLDEN_DIR / "report_sigma8.json", report)
    print(
        f"ledger tr={counts.tr} fr={counts.fr} fd={counts.fd} td={counts.td} "
        f"precision={precision:.4f} recall={recall:.4f}"
    )


def freeze_split(fused_doc: dict) -> None:
    stubs = []
    for case in fused_doc["cases"]:
        annotations = [ReaderAnnotation(box=BBox.from_dict(case["fused"][0]))] if case["fused"] else []
        stubs.append(
            CaseRecord(
                image_id=case["image_id"],
                original_width=case["original_width"],
                original_height=case["original_height"],
                annotations=annotations,
            )
        )
    manifest = balance_and_split(stubs, SPLIT_SEED)
    assert len(manifest.test) == 8 and len(manifest.validation) == 6 and len(manifest.train) == 26
    write_json(GOLDEN_DIR / "split_seed7.json", manifest.to_dict())


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    fused_doc = build_fused_doc()
    dataset = freeze_error_dataset(fused_doc)
    sets_by_image = freeze_referrals(dataset)
    freeze_report(dataset, sets_by_image)
    freeze_split(fused_doc)
    print(f"goldens -> {GOLDEN_DIR}")


if __name__ == "__main__":
    main()
