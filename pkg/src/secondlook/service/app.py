"""HTTP surface for the annotate -> recommend -> adjudicate loop.

All geometry on the wire is in the canonical 1024x1024 frame; original image
dimensions ride along for client-side display conversion only. The server is
the single place referral semantics run; clients only render.

Write semantics per session: annotation versions start at 1 (empty) when the
session is created, so the first PUT produces version 2. PUT accepts an
optional ``base_version``; a stale value is rejected with a version-conflict
error instead of last-writer-wins. Recommendations are idempotent for an
unchanged (annotation version, provider fingerprint) pair: the cached referral
set is returned with the same referral ids. Accepting a referral appends a new
annotation version containing the referral box (or its adjusted replacement);
rejecting records the decision and leaves annotations untouched.
"""

from __future__ import annotations

import base64
import threading
import time
import uuid
from typing import Callable, Literal, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..differential import referral_pipeline
from ..errors import (
    AlreadyDecidedError,
    InvalidBoxError,
    InvalidConfigError,
    ProviderError,
    SecondLookError,
    UnknownReferralError,
    UnknownSessionError,
    UnsupportedFormatError,
    VersionConflictError,
)
from ..geometry import BBox, CANONICAL_FRAME
from ..providers import DetectorProvider, NormalcyGate, gate_normalcy
from ..suppression import Detection
from .store import EventLog, LabeledBox, SessionState

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"

_STATUS_BY_CODE = {
    "unknown-session": 404,
    "unknown-referral": 404,
    "unknown-image": 404,
    "already-decided": 409,
    "version-conflict": 409,
    "unsupported-format": 415,
    "detector-unavailable": 503,
}


class BoxPayload(BaseModel):
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    label: Optional[str] = None


class CreateSessionRequest(BaseModel):
    image_id: str
    original_width: int = Field(gt=0)
    original_height: int = Field(gt=0)
    image_data: Optional[str] = None  # base64 PNG or JPEG
    image_ref: Optional[str] = None


class PutAnnotationsRequest(BaseModel):
    boxes: list[BoxPayload]
    base_version: Optional[int] = None


class DecisionRequest(BaseModel):
    action: Literal["accept", "reject"]
    adjusted_box: Optional[BoxPayload] = None
    label: Optional[str] = None


def _canonical_box(payload: BoxPayload) -> LabeledBox:
    box = BBox(payload.x_min, payload.y_min, payload.x_max, payload.y_max)
    if box.x_max > CANONICAL_FRAME[0] or box.y_max > CANONICAL_FRAME[1]:
        raise InvalidBoxError(f"box exceeds the canonical frame: {box.coords}")
    return LabeledBox(box=box, label=payload.label)


def create_app(
    log: EventLog,
    provider: Optional[DetectorProvider] = None,
    gate: Optional[NormalcyGate] = None,
    confidence_floor: float = 0.25,
    provider_fingerprint: Optional[dict] = None,
    clock: Callable[[], float] = time.time,
) -> FastAPI:
    app = FastAPI(title="second-look referral service")
    fingerprint = provider_fingerprint or {
        "kind": type(provider).__name__ if provider is not None else None,
        "confidence_floor": confidence_floor,
    }

    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def lock_for(session_id: str) -> threading.Lock:
        with locks_guard:
            return locks.setdefault(session_id, threading.Lock())

    @app.exception_handler(SecondLookError)
    async def domain_error_handler(request: Request, exc: SecondLookError):
        code = exc.code
        if isinstance(exc, ProviderError):
            code = "detector-unavailable"
        status = _STATUS_BY_CODE.get(code, 422)
        return JSONResponse(
            status_code=status,
            content={"error": {"code": code, "message": str(exc), "detail_code": exc.code}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "provider_configured": provider is not None}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        if body.image_data is None and body.image_ref is None:
            raise InvalidConfigError("either image_data or image_ref is required")
        if body.image_data is not None:
            try:
                raw = base64.b64decode(body.image_data, validate=True)
            except Exception as exc:
                raise UnsupportedFormatError("image_data is not valid base64") from exc
            if not (raw.startswith(_PNG_MAGIC) or raw.startswith(_JPEG_MAGIC)):
                raise UnsupportedFormatError("image payload must be PNG or JPEG")
        session_id = "s-" + uuid.uuid4().hex[:12]
        log.append(
            session_id,
            "session-created",
            {
                "image_id": body.image_id,
                "original_width": body.original_width,
                "original_height": body.original_height,
                "image_ref": body.image_ref,
                "image_data_b64": body.image_data,
            },
        )
        return {"session_id": session_id, "version": 1}

    def load(session_id: str) -> SessionState:
        if not log.exists(session_id):
            raise UnknownSessionError(f"no such session: {session_id!r}")
        return log.load(session_id)

    @app.put("/sessions/{session_id}/annotations")
    def put_annotations(session_id: str, body: PutAnnotationsRequest):
        with lock_for(session_id):
            state = load(session_id)
            if body.base_version is not None and body.base_version != state.latest.version:
                raise VersionConflictError(
                    f"base_version {body.base_version} is stale; latest is {state.latest.version}"
                )
            boxes = [_canonical_box(b) for b in body.boxes]  # validate all before appending
            new_version = state.latest.version + 1
            log.append(
                session_id,
                "annotations-put",
                {"version": new_version, "boxes": [b.to_dict() for b in boxes]},
            )
        return {"session_id": session_id, "version": new_version, "box_count": len(boxes)}

    @app.post("/sessions/{session_id}/recommendations")
    def recommend(session_id: str):
        with lock_for(session_id):
            state = load(session_id)
            version = state.latest.version

            cached = state.cached_recommendation(version, fingerprint)
            if cached is not None:
                return {
                    "session_id": session_id,
                    "annotation_version": version,
                    "gate_verdict": cached.gate_verdict,
                    "referrals": list(cached.referrals),
                    "cached": True,
                }

            if provider is None:
                raise ProviderError("no detector provider configured")
            verdict = gate_normalcy(state.image_id, gate)
            image_data = base64.b64decode(state.image_data_b64) if state.image_data_b64 else None
            detections = provider.detections(state.image_id, image_data)
            referral_set = referral_pipeline(
                detections,
                [b.box for b in state.latest.boxes],
                gate=verdict,
                confidence_floor=confidence_floor,
                image_id=state.image_id,
            )
            ordinal = len(state.recommendations) + 1
            referrals = []
            for i, det in enumerate(referral_set.referrals):
                item = det.to_dict()
                item["referral_id"] = f"r-{ordinal:03d}-{i:03d}"
                referrals.append(item)
            log.append(
                session_id,
                "recommendations-issued",
                {
                    "ordinal": ordinal,
                    "annotation_version": version,
                    "gate_verdict": verdict,
                    "fingerprint": fingerprint,
                    "referrals": referrals,
                },
            )
        return {
            "session_id": session_id,
            "annotation_version": version,
            "gate_verdict": verdict,
            "referrals": referrals,
            "cached": False,
        }

    @app.post("/sessions/{session_id}/referrals/{referral_id}/decision")
    def decide(session_id: str, referral_id: str, body: DecisionRequest):
        with lock_for(session_id):
            state = load(session_id)
            referral = state.referral_by_id(referral_id)
            if referral is None:
                raise UnknownReferralError(f"no such referral: {referral_id!r}")
            if referral_id in state.decided_ids():
                raise AlreadyDecidedError(f"referral {referral_id!r} already has a decision")

            payload: dict = {
                "referral_id": referral_id,
                "action": body.action,
                "timestamp": clock(),
            }
            version = state.latest.version
            if body.action == "accept":
                if body.adjusted_box is not None:
                    accepted = _canonical_box(body.adjusted_box)
                    if body.label is not None:
                        accepted = LabeledBox(box=accepted.box, label=body.label)
                else:
                    box = BBox(referral["x_min"], referral["y_min"], referral["x_max"], referral["y_max"])
                    accepted = LabeledBox(box=box, label=body.label or referral.get("label"))
                new_boxes = list(state.latest.boxes) + [accepted]
                version = state.latest.version + 1
                payload["adjusted_box"] = accepted.to_dict() if body.adjusted_box is not None else None
                payload["resulting_version"] = version
                payload["boxes"] = [b.to_dict() for b in new_boxes]
            log.append(session_id, "decision-recorded", payload)
        return {
            "session_id": session_id,
            "referral_id": referral_id,
            "action": body.action,
            "version": version,
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        state = load(session_id)
        return {
            "session_id": state.session_id,
            "image_id": state.image_id,
            "original_width": state.original_width,
            "original_height": state.original_height,
            "image_ref": state.image_ref,
            "has_image_data": state.image_data_b64 is not None,
            "version": state.latest.version,
            "annotations": state.latest.to_dict(),
            "annotation_versions": [v.to_dict() for v in state.versions],
            "recommendations": [r.to_dict() for r in state.recommendations],
            "decisions": [d.to_dict() for d in state.decisions],
        }

    return app
