"""Batch command-line surface: fuse, simulate, refer, eval, detector-eval, split, serve.

Every subcommand is a pure function of its inputs, flags, and seed; re-running
a command overwrites its output with identical bytes. Outputs are written
atomically after all computation succeeds, so a failing run never leaves a
partial artifact. Errors print one JSON object on stderr and exit with 2 for
bad input, 3 for provider failures, and 4 for anything unexpected.
"""

from __future__ import annotations

import functools
import json
import sys

import click

from ._jsonio import read_json, write_json
from .differential import DEFAULT_CONFIDENCE_FLOOR, ReferralSet, referral_pipeline
from .errors import InputError, InvalidConfigError, ProviderError, SecondLookError
from .evaluation import (
    classify_outcomes,
    compute_metrics,
    evaluate_detector,
    iou_statistics,
    summary_table,
)
from .fusion import DEFAULT_FUSION_IOU, FusedAnnotation, fuse
from .geometry import BBox
from .ingestion import (
    CaseRecord,
    ReaderAnnotation,
    balance_and_split,
    parse_annotations,
    read_dimensions,
)
from .providers import (
    DetectorProviderConfig,
    build_gate,
    build_provider,
    gate_normalcy,
)
from .simulation import (
    DEFAULT_MISS_FRACTION,
    ErrorDataset,
    SimulationConfig,
    simulate_from_fused,
)
from .suppression import Detection

EXIT_INPUT = 2
EXIT_PROVIDER = 3
EXIT_INTERNAL = 4


def _fail(code: str, message: str, exit_code: int) -> None:
    click.echo(json.dumps({"error": {"code": code, "message": message}}), err=True)
    sys.exit(exit_code)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InputError as exc:
            _fail(exc.code, str(exc), EXIT_INPUT)
        except ProviderError as exc:
            _fail(exc.code, str(exc), EXIT_PROVIDER)
        except SecondLookError as exc:
            _fail(exc.code, str(exc), EXIT_INTERNAL)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            _fail("input-error", f"{type(exc).__name__}: {exc}", EXIT_INPUT)

    return wrapper


@click.group()
@click.version_option(package_name="secondlook")
def main():
    """Second-look referral pipeline for reader annotations and detector output."""


@main.command(name="fuse")
@click.option("--annotations", "annotations_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dims", "dims_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--iou", "iou_threshold", default=DEFAULT_FUSION_IOU, show_default=True, type=float)
@_guarded
def fuse_cmd(annotations_path, dims_path, out_path, iou_threshold):
    """Parse reader annotations and fuse overlapping boxes per image."""
    dims = read_dimensions(dims_path)
    parsed = parse_annotations(annotations_path, dims)
    cases = []
    for case in parsed.cases:
        merged = fuse(case.annotations, iou_threshold)
        cases.append(
            {
                "image_id": case.image_id,
                "original_width": case.original_width,
                "original_height": case.original_height,
                "is_normal": case.is_normal,
                "fused": [f.to_dict() for f in merged],
            }
        )
    doc = {
        "fusion_threshold": iou_threshold,
        "cases": cases,
        "rejects": [r.to_dict() for r in parsed.rejects],
    }
    write_json(out_path, doc)
    click.echo(f"fused {len(cases)} cases ({len(parsed.rejects)} rejected rows) -> {out_path}")


def _load_fused(path: str) -> tuple[dict, dict[str, list[FusedAnnotation]]]:
    doc = read_json(path)
    by_image = {
        case["image_id"]: [FusedAnnotation.from_dict(f) for f in case["fused"]]
        for case in doc["cases"]
    }
    return doc, by_image


@main.command(name="simulate")
@click.option("--fused", "fused_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--fraction", default=DEFAULT_MISS_FRACTION, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--min-boxes", "min_boxes", default=1, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_guarded
def simulate_cmd(fused_path, fraction, seed, min_boxes, out_path):
    """Remove one fused box from a seeded fraction of abnormal cases."""
    if not 0.0 < fraction < 1.0:
        raise InvalidConfigError(f"removal fraction must be in (0,1): {fraction}")
    doc, by_image = _load_fused(fused_path)
    config = SimulationConfig(
        fraction=fraction,
        fusion_threshold=float(doc.get("fusion_threshold", DEFAULT_FUSION_IOU)),
        seed=seed,
        min_boxes_for_removal=min_boxes,
    )
    dataset = simulate_from_fused(by_image, config)
    write_json(out_path, dataset.to_dict())
    click.echo(
        f"simulated {len(dataset.misses)} misses across {len(dataset.cases)} cases -> {out_path}"
    )


@main.command(name="refer")
@click.option("--error", "error_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", "provider_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--conf-floor", "conf_floor", default=None, type=float,
              help=f"Confidence floor; defaults to the provider config value or {DEFAULT_CONFIDENCE_FLOOR}.")
@_guarded
def refer_cmd(error_path, provider_path, out_path, conf_floor):
    """Run detections against presented annotations and emit referral sets."""
    dataset = ErrorDataset.from_dict(read_json(error_path))
    raw_config = read_json(provider_path)
    provider_dict = raw_config.get("provider", raw_config)
    gate_dict = raw_config.get("gate") if "provider" in raw_config else None
    provider_config = DetectorProviderConfig.from_dict(provider_dict)
    provider = build_provider(provider_config, dataset=dataset)
    gate = build_gate(gate_dict)
    floor = conf_floor if conf_floor is not None else provider_config.confidence_floor

    referral_sets = []
    for case in sorted(dataset.cases, key=lambda c: c.image_id):
        verdict = gate_normalcy(case.image_id, gate)
        detections = provider.detections(case.image_id)
        referral_sets.append(
            referral_pipeline(
                detections,
                [f.box for f in case.presented],
                gate=verdict,
                confidence_floor=floor,
                image_id=case.image_id,
            )
        )
    doc = {
        "confidence_floor": floor,
        "provider": provider_config.fingerprint(),
        "gate_configured": gate is not None,
        "referral_sets": [rs.to_dict() for rs in referral_sets],
    }
    write_json(out_path, doc)
    total = sum(len(rs.referrals) for rs in referral_sets)
    click.echo(f"issued {total} referrals across {len(referral_sets)} cases -> {out_path}")


@main.command(name="eval")
@click.option("--referrals", "referrals_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--error", "error_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--match-iou", "match_iou", default=0.0, show_default=True, type=float)
@_guarded
def eval_cmd(referrals_path, error_path, out_path, match_iou):
    """Classify referral outcomes against the simulated misses and report metrics."""
    dataset = ErrorDataset.from_dict(read_json(error_path))
    referral_sets = [ReferralSet.from_dict(d) for d in read_json(referrals_path)["referral_sets"]]
    ledger = classify_outcomes(referral_sets, dataset, match_threshold=match_iou)
    metrics = compute_metrics(ledger.counts)
    try:
        stats = iou_statistics(ledger.matches).to_dict()
    except SecondLookError:
        stats = None
    report = {
        "match_threshold": match_iou,
        "counts": ledger.counts.to_dict(),
        "metrics": metrics.to_dict(),
        "iou_stats": stats,
        "ledger": ledger.to_dict(),
    }
    write_json(out_path, report)
    click.echo(summary_table(ledger, metrics), nl=False)
    click.echo(f"report -> {out_path}")


@main.command(name="detector-eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--iou-threshold", "iou_threshold", default=0.5, show_default=True, type=float)
@click.option("--conf-floor", "conf_floor", default=DEFAULT_CONFIDENCE_FLOOR, show_default=True, type=float)
@_guarded
def detector_eval_cmd(pred_path, gt_path, out_path, iou_threshold, conf_floor):
    """Score raw detections against fused ground truth (single class)."""
    predictions = {
        image_id: [Detection.from_dict(d) for d in items]
        for image_id, items in read_json(pred_path).items()
    }
    _, by_image = _load_fused(gt_path)
    ground_truth = {image_id: [f.box for f in fused] for image_id, fused in by_image.items()}
    result = evaluate_detector(
        predictions, ground_truth, iou_threshold=iou_threshold, confidence_floor=conf_floor
    )
    write_json(out_path, result.to_dict())
    click.echo(
        f"ap {result.average_precision:.4f}  precision {result.precision_at_floor:.4f}  "
        f"recall {result.recall_at_floor:.4f} -> {out_path}"
    )


@main.command(name="split")
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_guarded
def split_cmd(cases_path, seed, out_path):
    """Class-balanced, seeded train/validation/test split of fused cases."""
    doc = read_json(cases_path)
    stubs = []
    for case in doc["cases"]:
        # Only the normal/abnormal flag matters here; one box marks abnormal.
        annotations = (
            [ReaderAnnotation(box=BBox.from_dict(case["fused"][0]))] if case["fused"] else []
        )
        stubs.append(
            CaseRecord(
                image_id=case["image_id"],
                original_width=case["original_width"],
                original_height=case["original_height"],
                annotations=annotations,
            )
        )
    manifest = balance_and_split(stubs, seed)
    write_json(out_path, manifest.to_dict())
    click.echo(
        f"split {len(manifest.train)} train / {len(manifest.validation)} validation / "
        f"{len(manifest.test)} test -> {out_path}"
    )


@main.command(name="serve")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--sessions-dir", "sessions_dir", default="sessions", show_default=True)
@_guarded
def serve_cmd(config_path, host, port, sessions_dir):
    """Launch the annotate/recommend/adjudicate HTTP service."""
    import uvicorn

    from .service import EventLog, create_app

    config = read_json(config_path) if config_path else {}
    provider = None
    fingerprint = None
    if "provider" in config:
        provider_config = DetectorProviderConfig.from_dict(config["provider"])
        dataset = None
        if provider_config.kind == "jitter-oracle":
            dataset = ErrorDataset.from_dict(read_json(config["error_dataset"]))
        provider = build_provider(provider_config, dataset=dataset)
        fingerprint = provider_config.fingerprint()
    gate = build_gate(config.get("gate"))
    app = create_app(
        EventLog(config.get("sessions_dir", sessions_dir)),
        provider=provider,
        gate=gate,
        confidence_floor=float(config.get("confidence_floor", DEFAULT_CONFIDENCE_FLOOR)),
        provider_fingerprint=fingerprint,
    )
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
