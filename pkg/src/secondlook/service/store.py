"""Append-only per-session event logs and deterministic state replay.

Each session is one JSONL file; every state transition is an event. Session
state is never stored directly: it is always the fold of the event list, so
replaying a log after a restart reconstructs the exact same state (including
referral ids, which are derived from event order, and decision timestamps,
which are recorded in the events themselves rather than regenerated).

Event types:
  session-created      image reference/payload and original dimensions
  annotations-put      a full replacement annotation list as a new version
  recommendations-issued  referral set with ids, gate verdict, provider fingerprint
  decision-recorded    accept/reject of one referral; accepts embed the new
                       annotation list so replay never recomputes state
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import UnknownSessionError
from ..geometry import BBox

_SESSION_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


@dataclass(frozen=True)
class LabeledBox:
    box: BBox
    label: Optional[str] = None

    def to_dict(self) -> dict:
        d = self.box.to_dict()
        d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledBox":
        return cls(box=BBox.from_dict(d), label=d.get("label"))


@dataclass(frozen=True)
class AnnotationVersion:
    version: int
    boxes: tuple[LabeledBox, ...]
    origin: str  # "initial" | "put" | "accept"

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "origin": self.origin,
            "boxes": [b.to_dict() for b in self.boxes],
        }


@dataclass(frozen=True)
class RecommendationRecord:
    ordinal: int
    annotation_version: int
    gate_verdict: str
    fingerprint: dict
    referrals: tuple[dict, ...]  # each: referral_id + detection fields

    def to_dict(self) -> dict:
        return {
            "ordinal": self.ordinal,
            "annotation_version": self.annotation_version,
            "gate_verdict": self.gate_verdict,
            "fingerprint": self.fingerprint,
            "referrals": list(self.referrals),
        }


@dataclass(frozen=True)
class DecisionRecord:
    referral_id: str
    action: str  # "accept" | "reject"
    timestamp: float
    adjusted_box: Optional[LabeledBox] = None
    resulting_version: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "referral_id": self.referral_id,
            "action": self.action,
            "timestamp": self.timestamp,
            "adjusted_box": self.adjusted_box.to_dict() if self.adjusted_box else None,
            "resulting_version": self.resulting_version,
        }


@dataclass
class SessionState:
    session_id: str
    image_id: str
    original_width: int
    original_height: int
    image_ref: Optional[str] = None
    image_data_b64: Optional[str] = None
    versions: list[AnnotationVersion] = field(default_factory=list)
    recommendations: list[RecommendationRecord] = field(default_factory=list)
    decisions: list[DecisionRecord] = field(default_factory=list)

    @property
    def latest(self) -> AnnotationVersion:
        return self.versions[-1]

    def referral_by_id(self, referral_id: str) -> Optional[dict]:
        for record in self.recommendations:
            for referral in record.referrals:
                if referral["referral_id"] == referral_id:
                    return referral
        return None

    def decided_ids(self) -> set[str]:
        return {d.referral_id for d in self.decisions}

    def cached_recommendation(self, annotation_version: int, fingerprint: dict) -> Optional[RecommendationRecord]:
        for record in reversed(self.recommendations):
            if record.annotation_version == annotation_version and record.fingerprint == fingerprint:
                return record
        return None

    def to_dict(self) -> dict:
        """Complete state, used for replay-equality checks."""
        return {
            "session_id": self.session_id,
            "image_id": self.image_id,
            "original_width": self.original_width,
            "original_height": self.original_height,
            "image_ref": self.image_ref,
            "image_data_b64": self.image_data_b64,
            "versions": [v.to_dict() for v in self.versions],
            "recommendations": [r.to_dict() for r in self.recommendations],
            "decisions": [d.to_dict() for d in self.decisions],
        }


def replay(session_id: str, events: list[dict]) -> SessionState:
    """Fold the event list into session state. Pure; no recomputation."""
    state: Optional[SessionState] = None
    for event in events:
        kind = event["type"]
        payload = event["payload"]
        if kind == "session-created":
            state = SessionState(
                session_id=session_id,
                image_id=payload["image_id"],
                original_width=payload["original_width"],
                original_height=payload["original_height"],
                image_ref=payload.get("image_ref"),
                image_data_b64=payload.get("image_data_b64"),
                versions=[AnnotationVersion(version=1, boxes=(), origin="initial")],
            )
            continue
        if state is None:
            raise UnknownSessionError(f"event log for {session_id!r} does not start with session-created")
        if kind == "annotations-put":
            state.versions.append(
                AnnotationVersion(
                    version=payload["version"],
                    boxes=tuple(LabeledBox.from_dict(b) for b in payload["boxes"]),
                    origin="put",
                )
            )
        elif kind == "recommendations-issued":
            state.recommendations.append(
                RecommendationRecord(
                    ordinal=payload["ordinal"],
                    annotation_version=payload["annotation_version"],
                    gate_verdict=payload["gate_verdict"],
                    fingerprint=payload["fingerprint"],
                    referrals=tuple(payload["referrals"]),
                )
            )
        elif kind == "decision-recorded":
            adjusted = payload.get("adjusted_box")
            state.decisions.append(
                DecisionRecord(
                    referral_id=payload["referral_id"],
                    action=payload["action"],
                    timestamp=payload["timestamp"],
                    adjusted_box=LabeledBox.from_dict(adjusted) if adjusted else None,
                    resulting_version=payload.get("resulting_version"),
                )
            )
            if payload["action"] == "accept":
                state.versions.append(
                    AnnotationVersion(
                        version=payload["resulting_version"],
                        boxes=tuple(LabeledBox.from_dict(b) for b in payload["boxes"]),
                        origin="accept",
                    )
                )
        else:
            raise UnknownSessionError(f"unknown event type {kind!r} in log for {session_id!r}")
    if state is None:
        raise UnknownSessionError(f"empty event log for {session_id!r}")
    return state


class EventLog:
    """JSONL event persistence, one file per session, appends serialized."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._seqs: dict[str, int] = {}

    def _path(self, session_id: str) -> Path:
        if not _SESSION_ID_RE.match(session_id):
            raise UnknownSessionError(f"invalid session id {session_id!r}")
        return self.root / f"{session_id}.jsonl"

    def exists(self, session_id: str) -> bool:
        try:
            return self._path(session_id).exists()
        except UnknownSessionError:
            return False

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def append(self, session_id: str, event_type: str, payload: dict) -> int:
        path = self._path(session_id)
        with self._lock:
            if session_id not in self._seqs:
                self._seqs[session_id] = len(self.events(session_id)) if path.exists() else 0
            seq = self._seqs[session_id] + 1
            line = json.dumps({"seq": seq, "type": event_type, "payload": payload}, sort_keys=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
            self._seqs[session_id] = seq
        return seq

    def events(self, session_id: str) -> list[dict]:
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSessionError(f"no such session: {session_id!r}")
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def load(self, session_id: str) -> SessionState:
        return replay(session_id, self.events(session_id))
