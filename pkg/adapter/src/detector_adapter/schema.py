"""The detection wire contract, as JSON schemas plus the checks schemas can't express.

One POST per image. Request: ``{image_id, image_data? | image_ref?,
canonical_frame: [w, h]}``. Response: ``{image_id, detections: [{x_min, y_min,
x_max, y_max, confidence, label?}]}`` with coordinates in the requested
canonical frame and confidences in [0, 1]. This module is deliberately
self-contained so the adapter carries the full contract with it.
"""

from __future__ import annotations

import jsonschema

CANONICAL_FRAME = [1024, 1024]

DETECTION_ITEM_SCHEMA = {
    "type": "object",
    "required": ["x_min", "y_min", "x_max", "y_max", "confidence"],
    "properties": {
        "x_min": {"type": "number"},
        "y_min": {"type": "number"},
        "x_max": {"type": "number"},
        "y_max": {"type": "number"},
        "confidence": {"type": "number", "minimum": 0, "maximum": 1},
        "label": {"type": "string"},
    },
}

RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["image_id", "detections"],
    "properties": {
        "image_id": {"type": "string"},
        "detections": {"type": "array", "items": DETECTION_ITEM_SCHEMA},
    },
}

REQUEST_SCHEMA = {
    "type": "object",
    "required": ["image_id", "canonical_frame"],
    "properties": {
        "image_id": {"type": "string"},
        "image_ref": {"type": "string"},
        "image_data": {"type": "string"},  # base64 payload when available
        "canonical_frame": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
    },
}


def request_violations(body: object) -> list[str]:
    """Schema findings for a request body, plus the positive-frame check."""
    validator = jsonschema.Draft202012Validator(REQUEST_SCHEMA)
    out = [f"request: {e.message}" for e in validator.iter_errors(body)]
    if not out:
        frame = body["canonical_frame"]
        if frame[0] <= 0 or frame[1] <= 0:
            out.append(f"request: canonical_frame must be positive, got {frame}")
    return out


def response_violations(body: object, expected_image_id: str, frame: list[float]) -> list[str]:
    """Everything that makes a response unusable by a wire-protocol client.

    Beyond the JSON schema: the echoed image_id, box edge ordering, and
    containment in the requested canonical frame.
    """
    validator = jsonschema.Draft202012Validator(RESPONSE_SCHEMA)
    out = [f"response: {e.message}" for e in validator.iter_errors(body)]
    if out:
        return out
    if body["image_id"] != expected_image_id:
        out.append(f"response: image_id {body['image_id']!r} != requested {expected_image_id!r}")
    for i, det in enumerate(body["detections"]):
        if not det["x_min"] < det["x_max"] or not det["y_min"] < det["y_max"]:
            out.append(f"detections[{i}]: degenerate box {det['x_min'], det['y_min'], det['x_max'], det['y_max']}")
            continue
        if det["x_min"] < 0 or det["y_min"] < 0 or det["x_max"] > frame[0] or det["y_max"] > frame[1]:
            out.append(f"detections[{i}]: box outside canonical frame {frame}")
    return out
