from concurrent.futures import ThreadPoolExecutor

import jsonschema
import pytest
from fastapi.testclient import TestClient

from detector_adapter import StaticHook, create_adapter_app

# Model space is 640x640 here, so the canonical 1024-frame scale factor is 1.6.
MANIFEST = {
    "img-1": [
        {"x_min": 100, "y_min": 100, "x_max": 200, "y_max": 200, "score": 0.9, "label": "abnormal"},
        {"x_min": 400, "y_min": 400, "x_max": 500, "y_max": 500, "score": 0.8},
    ],
    "img-2": [
        {"x_min": 0, "y_min": 0, "x_max": 320, "y_max": 320, "score": 0.55},
    ],
    "img-overshoot": [
        {"x_min": 630, "y_min": 630, "x_max": 650, "y_max": 650, "score": 1.5},
    ],
    "img-inverted": [
        {"x_min": 300, "y_min": 300, "x_max": 200, "y_max": 200, "score": 0.9},
    ],
    "img-outside": [
        {"x_min": 700, "y_min": 700, "x_max": 800, "y_max": 800, "score": 0.9},
    ],
}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_adapter_app(StaticHook(MANIFEST)))


def post(client, image_id, frame=(1024, 1024), **extra):
    return client.post(
        "/detections", json={"image_id": image_id, "canonical_frame": list(frame), **extra}
    )


def test_rescales_model_space_to_canonical_frame(client):
    body = post(client, "img-1").json()
    assert body["image_id"] == "img-1"
    first, second = body["detections"]
    assert (first["x_min"], first["y_min"], first["x_max"], first["y_max"]) == (160.0, 160.0, 320.0, 320.0)
    assert first["label"] == "abnormal"
    assert (second["x_min"], second["y_min"], second["x_max"], second["y_max"]) == (640.0, 640.0, 800.0, 800.0)
    assert "label" not in second


def test_requested_frame_controls_the_scale(client):
    body = post(client, "img-1", frame=(512, 512)).json()
    first = body["detections"][0]
    assert (first["x_min"], first["y_min"], first["x_max"], first["y_max"]) == (80.0, 80.0, 160.0, 160.0)


def test_response_passes_the_engine_schema_validator(client):
    from secondlook import DETECTION_RESPONSE_SCHEMA

    for image_id in ("img-1", "img-2", "img-overshoot"):
        jsonschema.validate(post(client, image_id).json(), DETECTION_RESPONSE_SCHEMA)


def test_responses_are_byte_stable(client):
    assert post(client, "img-1").content == post(client, "img-1").content


def test_overshoot_is_clamped_to_frame_and_unit_confidence(client):
    det = post(client, "img-overshoot").json()["detections"][0]
    assert det["x_min"] == 1008.0 and det["y_min"] == 1008.0
    assert det["x_max"] == 1024.0 and det["y_max"] == 1024.0
    assert det["confidence"] == 1.0


def test_inverted_box_aborts_with_provider_error(client):
    response = post(client, "img-inverted")
    assert response.status_code == 500
    error = response.json()["error"]
    assert error["code"] == "invalid-detector-output"
    assert any("degenerate" in v for v in error["violations"])


def test_box_entirely_outside_frame_aborts(client):
    # Clamping collapses it to a zero-area corner box, which self-validation rejects.
    response = post(client, "img-outside")
    assert response.status_code == 500
    assert response.json()["error"]["code"] == "invalid-detector-output"


def test_unknown_image_is_404(client):
    response = post(client, "img-missing")
    assert response.status_code == 404
    assert response.json()["error"]["code"] == "unknown-image"


def test_missing_canonical_frame_is_400(client):
    response = client.post("/detections", json={"image_id": "img-1"})
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "bad-request"


def test_non_positive_frame_is_400(client):
    response = post(client, "img-1", frame=(0, 1024))
    assert response.status_code == 400


def test_invalid_base64_is_400(client):
    response = post(client, "img-1", image_data="@@not-base64@@")
    assert response.status_code == 400
    assert "base64" in response.json()["error"]["message"]


def test_crashing_hook_is_contained():
    class ExplodingHook:
        model_frame = (640.0, 640.0)

        def infer(self, image_id, image_data, image_ref):
            raise RuntimeError("weights not loaded")

    client = TestClient(create_adapter_app(ExplodingHook()), raise_server_exceptions=False)
    response = post(client, "img-1")
    assert response.status_code == 500
    assert response.json()["error"]["code"] == "hook-failure"


def test_concurrent_requests_for_distinct_images(client):
    expectations = {
        "img-1": 2,
        "img-2": 1,
    }

    def fetch(image_id):
        body = post(client, image_id).json()
        return image_id, body["image_id"], len(body["detections"])

    jobs = [image_id for image_id in expectations for _ in range(20)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        for asked, answered, count in pool.map(fetch, jobs):
            assert answered == asked
            assert count == expectations[asked]


def test_healthz_reports_model_frame(client):
    body = client.get("/healthz").json()
    assert body == {"status": "ok", "model_frame": [640.0, 640.0]}
