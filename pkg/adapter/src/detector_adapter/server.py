"""HTTP surface: one detection endpoint that self-validates everything it emits.

The adapter owns model-space to canonical-frame rescaling and confidence
clamping. Every response is checked against the wire schema before it leaves
the process; a hook emitting unusable geometry aborts the response with a
provider error rather than shipping it. Requests for distinct images are
independent, and handlers keep no mutable state, so concurrent calls are safe.
"""

from __future__ import annotations

import base64
import binascii
from typing import Optional

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse

from .hooks import ModelHook, RawBox
from .schema import request_violations, response_violations


def _error(status: int, code: str, message: str, violations: Optional[list[str]] = None) -> JSONResponse:
    body: dict = {"error": {"code": code, "message": message}}
    if violations:
        body["error"]["violations"] = violations
    return JSONResponse(status_code=status, content=body)


def _rescaled(raw: RawBox, model_frame: tuple[float, float], frame: list[float]) -> dict:
    sx = frame[0] / model_frame[0]
    sy = frame[1] / model_frame[1]
    det = {
        "x_min": min(max(raw.x_min * sx, 0.0), frame[0]),
        "y_min": min(max(raw.y_min * sy, 0.0), frame[1]),
        "x_max": min(max(raw.x_max * sx, 0.0), frame[0]),
        "y_max": min(max(raw.y_max * sy, 0.0), frame[1]),
        "confidence": min(max(raw.score, 0.0), 1.0),
    }
    if raw.label is not None:
        det["label"] = raw.label
    return det


def create_adapter_app(hook: ModelHook) -> FastAPI:
    app = FastAPI(title="detection wire adapter", docs_url=None, redoc_url=None)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "model_frame": list(hook.model_frame)}

    @app.post("/detections")
    def detections(payload: dict = Body(...)):
        problems = request_violations(payload)
        if problems:
            return _error(400, "bad-request", "request failed wire-schema validation", problems)

        image_id = payload["image_id"]
        frame = [float(v) for v in payload["canonical_frame"]]
        image_data: Optional[bytes] = None
        if "image_data" in payload:
            try:
                image_data = base64.b64decode(payload["image_data"], validate=True)
            except (binascii.Error, ValueError):
                return _error(400, "bad-request", "image_data is not valid base64")

        try:
            raw_boxes = hook.infer(image_id, image_data, payload.get("image_ref"))
        except LookupError:
            return _error(404, "unknown-image", f"hook knows no image {image_id!r}")
        except Exception as exc:  # noqa: BLE001 - a broken hook must not crash the server
            return _error(500, "hook-failure", f"{type(exc).__name__}: {exc}")

        response = {
            "image_id": image_id,
            "detections": [_rescaled(raw, hook.model_frame, frame) for raw in raw_boxes],
        }
        problems = response_violations(response, image_id, frame)
        if problems:
            return _error(500, "invalid-detector-output", "hook output failed self-validation", problems)
        return JSONResponse(status_code=200, content=response)

    return app


def serve_adapter(hook: ModelHook, host: str = "127.0.0.1", port: int = 8001) -> None:
    """Run the adapter as a standalone provider (blocking)."""
    import uvicorn

    uvicorn.run(create_adapter_app(hook), host=host, port=port)
