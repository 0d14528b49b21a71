import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from secondlook._jsonio import read_json, write_json
from secondlook.cli import main

from .conftest import TOY_DIR


@pytest.fixture()
def runner():
    return CliRunner()


def run_ok(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output + (result.stderr or "")
    return result


@pytest.fixture()
def fused_path(runner, tmp_path) -> Path:
    out = tmp_path / "fused.json"
    run_ok(
        runner,
        ["fuse", "--annotations", str(TOY_DIR / "annotations.csv"),
         "--dims", str(TOY_DIR / "dimensions.csv"), "--out", str(out)],
    )
    return out


@pytest.fixture()
def error_path(runner, tmp_path, fused_path) -> Path:
    out = tmp_path / "error.json"
    run_ok(runner, ["simulate", "--fused", str(fused_path), "--seed", "42", "--out", str(out)])
    return out


def jitter_config(tmp_path, **overrides) -> Path:
    cfg = {"provider": {"kind": "jitter-oracle", "sigma": 0.0, "extras": 0, "drops": 0, "seed": 7}}
    cfg["provider"].update(overrides)
    path = tmp_path / "provider.json"
    write_json(path, cfg)
    return path


class TestFullChain:
    def test_identity_chain_produces_perfect_metrics(self, runner, tmp_path, error_path):
        referrals = tmp_path / "referrals.json"
        report = tmp_path / "report.json"
        cfg = jitter_config(tmp_path)
        run_ok(runner, ["refer", "--error", str(error_path), "--provider", str(cfg),
                        "--out", str(referrals)])
        result = run_ok(runner, ["eval", "--referrals", str(referrals),
                                 "--error", str(error_path), "--out", str(report)])
        doc = read_json(report)
        assert doc["counts"] == {"tr": 6, "fr": 0, "fd": 0, "td": 34}
        assert doc["metrics"]["recall"] == 1.0
        assert doc["metrics"]["precision"] == 1.0
        assert doc["iou_stats"]["median"] == 1.0
        assert "true referrals" in result.output

    def test_reruns_are_byte_identical(self, runner, tmp_path, fused_path, error_path):
        first = fused_path.read_bytes()
        run_ok(
            runner,
            ["fuse", "--annotations", str(TOY_DIR / "annotations.csv"),
             "--dims", str(TOY_DIR / "dimensions.csv"), "--out", str(fused_path)],
        )
        assert fused_path.read_bytes() == first

        error_bytes = error_path.read_bytes()
        run_ok(runner, ["simulate", "--fused", str(fused_path), "--seed", "42",
                        "--out", str(error_path)])
        assert error_path.read_bytes() == error_bytes

    def test_simulate_seed_changes_output(self, runner, tmp_path, fused_path):
        a = tmp_path / "e1.json"
        b = tmp_path / "e2.json"
        run_ok(runner, ["simulate", "--fused", str(fused_path), "--seed", "1", "--out", str(a)])
        run_ok(runner, ["simulate", "--fused", str(fused_path), "--seed", "2", "--out", str(b)])
        assert a.read_bytes() != b.read_bytes()


class TestExitCodes:
    def test_missing_input_file_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["simulate", "--fused", str(tmp_path / "nope.json"),
                                      "--out", str(tmp_path / "o.json")])
        assert result.exit_code == 2

    def test_malformed_json_is_input_error(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        result = runner.invoke(main, ["simulate", "--fused", str(bad), "--out", str(tmp_path / "o.json")])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["code"] == "input-error"

    def test_bad_fraction_is_input_error(self, runner, tmp_path, fused_path):
        result = runner.invoke(main, ["simulate", "--fused", str(fused_path), "--fraction", "1.5",
                                      "--out", str(tmp_path / "o.json")])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["code"] == "invalid-config"

    def test_unknown_provider_kind_is_input_error(self, runner, tmp_path, error_path):
        cfg = tmp_path / "p.json"
        write_json(cfg, {"provider": {"kind": "quantum"}})
        result = runner.invoke(main, ["refer", "--error", str(error_path), "--provider", str(cfg),
                                      "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["code"] == "invalid-config"

    def test_unreachable_detector_is_provider_error(self, runner, tmp_path, error_path):
        cfg = tmp_path / "p.json"
        # Port 1 on localhost refuses connections immediately.
        write_json(cfg, {"provider": {"kind": "remote-endpoint",
                                      "endpoint": "http://127.0.0.1:1/detections", "timeout": 1.0}})
        result = runner.invoke(main, ["refer", "--error", str(error_path), "--provider", str(cfg),
                                      "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 3
        assert json.loads(result.stderr)["error"]["code"] == "provider-timeout"
        assert not (tmp_path / "r.json").exists()  # no partial output

    def test_eval_with_unknown_image_ids(self, runner, tmp_path, error_path):
        referrals = tmp_path / "r.json"
        write_json(referrals, {"referral_sets": [
            {"image_id": "img-999", "referrals": [], "annotations_used": []}
        ]})
        result = runner.invoke(main, ["eval", "--referrals", str(referrals),
                                      "--error", str(error_path), "--out", str(tmp_path / "o.json")])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["code"] == "unknown-image"
        assert not (tmp_path / "o.json").exists()

    def test_missing_manifest_image_is_input_error(self, runner, tmp_path, error_path):
        manifest = tmp_path / "manifest.json"
        write_json(manifest, {})  # knows no images at all
        cfg = tmp_path / "p.json"
        write_json(cfg, {"provider": {"kind": "static-manifest", "manifest": str(manifest)}})
        result = runner.invoke(main, ["refer", "--error", str(error_path), "--provider", str(cfg),
                                      "--out", str(tmp_path / "r.json")])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["code"] == "unknown-image"


class TestDetectorEval:
    def test_identity_predictions(self, runner, tmp_path, fused_path):
        fused_doc = read_json(fused_path)
        preds = {}
        for case in fused_doc["cases"]:
            preds[case["image_id"]] = [
                {"x_min": f["x_min"], "y_min": f["y_min"], "x_max": f["x_max"], "y_max": f["y_max"],
                 "confidence": 1.0}
                for f in case["fused"]
            ]
        pred_path = tmp_path / "pred.json"
        write_json(pred_path, preds)
        out = tmp_path / "detmetrics.json"
        result = run_ok(runner, ["detector-eval", "--pred", str(pred_path), "--gt", str(fused_path),
                                 "--out", str(out)])
        doc = read_json(out)
        assert doc["average_precision"] == 1.0
        assert doc["precision_at_floor"] == 1.0
        assert doc["recall_at_floor"] == 1.0
        assert "ap 1.0000" in result.output


class TestSplit:
    def test_manifest_counts(self, runner, tmp_path, fused_path):
        out = tmp_path / "manifest.json"
        run_ok(runner, ["split", "--cases", str(fused_path), "--seed", "7", "--out", str(out)])
        doc = read_json(out)
        assert doc["seed"] == 7
        assert len(doc["test"]) == 8
        assert len(doc["validation"]) == 6
        assert len(doc["train"]) == 26
        everything = doc["train"] + doc["validation"] + doc["test"]
        assert len(set(everything)) == 40

    def test_deterministic(self, runner, tmp_path, fused_path):
        a = tmp_path / "m1.json"
        b = tmp_path / "m2.json"
        run_ok(runner, ["split", "--cases", str(fused_path), "--seed", "7", "--out", str(a)])
        run_ok(runner, ["split", "--cases", str(fused_path), "--seed", "7", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


def test_refer_conf_floor_flag_overrides_config(runner, tmp_path, error_path):
    referrals_default = tmp_path / "r1.json"
    referrals_high = tmp_path / "r2.json"
    cfg = jitter_config(tmp_path)
    run_ok(runner, ["refer", "--error", str(error_path), "--provider", str(cfg),
                    "--out", str(referrals_default)])
    run_ok(runner, ["refer", "--error", str(error_path), "--provider", str(cfg),
                    "--conf-floor", "0.999", "--out", str(referrals_high)])
    high = read_json(referrals_high)
    assert high["confidence_floor"] == 0.999
    total_high = sum(len(rs["referrals"]) for rs in high["referral_sets"])
    total_default = sum(len(rs["referrals"]) for rs in read_json(referrals_default)["referral_sets"])
    assert total_high < total_default
