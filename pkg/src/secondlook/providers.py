"""Pluggable detection sources and the optional normalcy gate.

The engine never runs a model itself; detections arrive from one of three
provider kinds, all speaking the same canonical-frame geometry:

* ``static-manifest``: a JSON file mapping image_id to recorded detections.
* ``remote-endpoint``: one HTTP POST per image against a detector service.
  Request: ``{image_id, image_data?, image_ref?, canonical_frame: [1024, 1024]}``.
  Response: ``{image_id, detections: [{x_min, y_min, x_max, y_max, confidence,
  label?}]}``. Responses are schema-validated before anything reaches the
  differential stage.
* ``jitter-oracle``: a built-in test oracle that replays a simulated-miss
  dataset's full fused ground truth, optionally perturbed by seeded gaussian
  coordinate noise, with seeded dropped boxes and extra false boxes.

The normalcy gate is fail-open: timeouts and unknown images yield
"unavailable" (with a warning), never a silent suppression of referrals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import httpx
import jsonschema

from ._jsonio import read_json
from ._rng import substream
from .differential import GATE_ABNORMAL, GATE_NORMAL, GATE_UNAVAILABLE
from .errors import (
    InvalidConfigError,
    ProviderTimeoutError,
    SchemaViolationError,
    UnknownImageError,
)
from .geometry import BBox
from .ingestion import ANY_ABNORMALITY
from .simulation import ErrorDataset
from .suppression import Detection

log = logging.getLogger(__name__)

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

DETECTION_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["image_id", "detections"],
    "properties": {
        "image_id": {"type": "string"},
        "detections": {"type": "array", "items": DETECTION_ITEM_SCHEMA},
    },
}

DETECTION_REQUEST_SCHEMA = {
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

PROVIDER_KINDS = ("static-manifest", "remote-endpoint", "jitter-oracle")


@dataclass
class DetectorProviderConfig:
    """One active provider kind plus its transport settings."""

    kind: str
    manifest_path: Optional[str] = None
    endpoint: Optional[str] = None
    timeout: float = 10.0
    confidence_floor: float = 0.25
    sigma: float = 0.0
    extras: int = 0
    drops: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise InvalidConfigError(f"unknown provider kind: {self.kind!r}")
        if self.timeout <= 0:
            raise InvalidConfigError(f"timeout must be positive: {self.timeout}")
        if self.kind == "static-manifest" and not self.manifest_path:
            raise InvalidConfigError("static-manifest provider needs manifest_path")
        if self.kind == "remote-endpoint" and not self.endpoint:
            raise InvalidConfigError("remote-endpoint provider needs endpoint")

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorProviderConfig":
        return cls(
            kind=d.get("kind", ""),
            manifest_path=d.get("manifest"),
            endpoint=d.get("endpoint"),
            timeout=float(d.get("timeout", 10.0)),
            confidence_floor=float(d.get("confidence_floor", 0.25)),
            sigma=float(d.get("sigma", 0.0)),
            extras=int(d.get("extras", 0)),
            drops=int(d.get("drops", 0)),
            seed=int(d.get("seed", 0)),
        )

    def fingerprint(self) -> dict:
        return {
            "kind": self.kind,
            "manifest": self.manifest_path,
            "endpoint": self.endpoint,
            "confidence_floor": self.confidence_floor,
            "sigma": self.sigma,
            "extras": self.extras,
            "drops": self.drops,
            "seed": self.seed,
        }


class DetectorProvider(Protocol):
    def detections(self, image_id: str, image_data: Optional[bytes] = None) -> list[Detection]: ...


def _parse_detection(item: dict, where: str) -> Detection:
    """Validated wire item -> Detection; slight frame overshoot is clamped."""
    try:
        jsonschema.validate(item, DETECTION_ITEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaViolationError(f"{where}: {exc.message}") from exc
    def clamp(v: float, limit: float) -> float:
        return min(max(float(v), 0.0), limit)

    fw, fh = float(CANONICAL_FRAME[0]), float(CANONICAL_FRAME[1])
    try:
        box = BBox(
            clamp(item["x_min"], fw),
            clamp(item["y_min"], fh),
            clamp(item["x_max"], fw),
            clamp(item["y_max"], fh),
        )
    except Exception as exc:
        raise SchemaViolationError(f"{where}: invalid box {item}") from exc
    return Detection(box=box, confidence=float(item["confidence"]), label=item.get("label"))


class StaticManifestProvider:
    """Replays recorded detections from a JSON mapping image_id -> detection list."""

    def __init__(self, manifest: dict[str, list[dict]]):
        self._manifest = manifest

    @classmethod
    def from_file(cls, path: str) -> "StaticManifestProvider":
        return cls(read_json(path))

    def detections(self, image_id: str, image_data: Optional[bytes] = None) -> list[Detection]:
        if image_id not in self._manifest:
            raise UnknownImageError(f"no recorded detections for {image_id!r}")
        return [
            _parse_detection(item, f"manifest[{image_id}][{i}]")
            for i, item in enumerate(self._manifest[image_id])
        ]


class RemoteEndpointProvider:
    """One POST per image against an external detector; schema-validated."""

    def __init__(self, endpoint: str, timeout: float = 10.0, transport: Optional[httpx.BaseTransport] = None):
        self.endpoint = endpoint
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def detections(self, image_id: str, image_data: Optional[bytes] = None) -> list[Detection]:
        body: dict = {"image_id": image_id, "canonical_frame": CANONICAL_FRAME}
        if image_data is not None:
            import base64

            body["image_data"] = base64.b64encode(image_data).decode("ascii")
        else:
            body["image_ref"] = image_id
        try:
            response = self._client.post(self.endpoint, json=body)
        except httpx.TimeoutException as exc:
            raise ProviderTimeoutError(f"detector at {self.endpoint} timed out") from exc
        except httpx.HTTPError as exc:
            raise ProviderTimeoutError(f"detector at {self.endpoint} unreachable: {exc}") from exc
        if response.status_code != 200:
            raise SchemaViolationError(f"detector returned HTTP {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise SchemaViolationError("detector response is not JSON") from exc
        try:
            jsonschema.validate(payload, DETECTION_RESPONSE_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SchemaViolationError(f"detector response: {exc.message}") from exc
        if payload["image_id"] != image_id:
            raise SchemaViolationError(
                f"detector answered for {payload['image_id']!r}, asked about {image_id!r}"
            )
        return [
            _parse_detection(item, f"response[{i}]") for i, item in enumerate(payload["detections"])
        ]


class JitterOracleProvider:
    """Ground-truth replay with seeded noise; the test double for a real detector.

    For each image the per-image substream draws, in this order: one
    confidence then four coordinate offsets per ground-truth box (canonical
    box order), then the dropped-box choice, then each extra box's geometry
    and confidence. Perturbed coordinates are re-ordered and clamped to the
    frame; a box that collapses is re-inflated to 1 px around its midpoint.
    Dropped boxes are recorded in ``self.log`` for auditing.
    """

    def __init__(self, dataset: ErrorDataset, sigma: float = 0.0, extras: int = 0, drops: int = 0, seed: int = 0):
        self.dataset = dataset
        self.sigma = sigma
        self.extras = extras
        self.drops = drops
        self.seed = seed
        self.log: dict[str, dict] = {}

    def _perturb(self, rng, box: BBox) -> BBox:
        frame = float(CANONICAL_FRAME[0])
        offsets = rng.normal(0.0, 1.0, size=4) * self.sigma
        if self.sigma == 0.0:
            return box
        xs = sorted((box.x_min + offsets[0], box.x_max + offsets[2]))
        ys = sorted((box.y_min + offsets[1], box.y_max + offsets[3]))
        x_lo, x_hi = (min(max(v, 0.0), frame) for v in xs)
        y_lo, y_hi = (min(max(v, 0.0), frame) for v in ys)
        if x_hi - x_lo < 1e-9:
            mid = min(max((x_lo + x_hi) / 2, 0.5), frame - 0.5)
            x_lo, x_hi = mid - 0.5, mid + 0.5
        if y_hi - y_lo < 1e-9:
            mid = min(max((y_lo + y_hi) / 2, 0.5), frame - 0.5)
            y_lo, y_hi = mid - 0.5, mid + 0.5
        return BBox(x_lo, y_lo, x_hi, y_hi)

    def detections(self, image_id: str, image_data: Optional[bytes] = None) -> list[Detection]:
        ground_truth = self.dataset.ground_truth(image_id)  # raises UnknownImageError
        rng = substream(self.seed, "jitter", image_id)
        frame = float(CANONICAL_FRAME[0])

        detections = []
        for fused in ground_truth:
            confidence = float(rng.uniform(0.5, 1.0))
            detections.append(
                Detection(box=self._perturb(rng, fused.box), confidence=confidence, label=ANY_ABNORMALITY)
            )

        dropped: list[Detection] = []
        if self.drops > 0 and detections:
            k = min(self.drops, len(detections))
            drop_idx = set(int(i) for i in rng.choice(len(detections), size=k, replace=False))
            dropped = [d for i, d in enumerate(detections) if i in drop_idx]
            detections = [d for i, d in enumerate(detections) if i not in drop_idx]

        for _ in range(self.extras):
            w = float(rng.uniform(48.0, 224.0))
            h = float(rng.uniform(48.0, 224.0))
            x = float(rng.uniform(0.0, frame - w))
            y = float(rng.uniform(0.0, frame - h))
            confidence = float(rng.uniform(0.3, 0.9))
            detections.append(Detection(box=BBox(x, y, x + w, y + h), confidence=confidence, label=ANY_ABNORMALITY))

        self.log[image_id] = {"dropped": [d.to_dict() for d in dropped], "emitted": len(detections)}
        return detections


def build_provider(config: DetectorProviderConfig, dataset: Optional[ErrorDataset] = None) -> DetectorProvider:
    if config.kind == "static-manifest":
        return StaticManifestProvider.from_file(config.manifest_path)
    if config.kind == "remote-endpoint":
        return RemoteEndpointProvider(config.endpoint, timeout=config.timeout)
    if dataset is None:
        raise InvalidConfigError("jitter-oracle provider needs a simulated-miss dataset")
    return JitterOracleProvider(
        dataset, sigma=config.sigma, extras=config.extras, drops=config.drops, seed=config.seed
    )


def get_detections(image_id: str, provider: DetectorProvider) -> list[Detection]:
    """Fetch one image's detections from whichever provider is configured."""
    return provider.detections(image_id)


# --- normalcy gate -----------------------------------------------------------

VERDICTS = (GATE_NORMAL, GATE_ABNORMAL)


class NormalcyGate(Protocol):
    def verdict(self, image_id: str) -> str: ...


class StaticVerdictGate:
    """Per-image verdicts from a JSON mapping image_id -> "normal" | "abnormal"."""

    def __init__(self, verdicts: dict[str, str]):
        self._verdicts = verdicts

    @classmethod
    def from_file(cls, path: str) -> "StaticVerdictGate":
        return cls(read_json(path))

    def verdict(self, image_id: str) -> str:
        value = self._verdicts.get(image_id)
        if value not in VERDICTS:
            raise UnknownImageError(f"no gate verdict for {image_id!r}")
        return value


class RemoteVerdictGate:
    def __init__(self, endpoint: str, timeout: float = 10.0, transport: Optional[httpx.BaseTransport] = None):
        self.endpoint = endpoint
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def verdict(self, image_id: str) -> str:
        try:
            response = self._client.post(self.endpoint, json={"image_id": image_id})
        except httpx.TimeoutException as exc:
            raise ProviderTimeoutError(f"gate at {self.endpoint} timed out") from exc
        except httpx.HTTPError as exc:
            raise ProviderTimeoutError(f"gate at {self.endpoint} unreachable: {exc}") from exc
        if response.status_code != 200:
            raise SchemaViolationError(f"gate returned HTTP {response.status_code}")
        value = response.json().get("verdict")
        if value not in VERDICTS:
            raise SchemaViolationError(f"gate verdict must be normal/abnormal, got {value!r}")
        return value


def gate_normalcy(image_id: str, gate: Optional[NormalcyGate]) -> str:
    """Gate verdict for an image; unconfigured or failing gates are "unavailable".

    Fail-open by design: a gate outage must never suppress referrals, so every
    failure mode degrades to "unavailable" with a warning instead of raising.
    """
    if gate is None:
        return GATE_UNAVAILABLE
    try:
        return gate.verdict(image_id)
    except (ProviderTimeoutError, SchemaViolationError, UnknownImageError) as exc:
        log.warning("normalcy gate unavailable for %s: %s", image_id, exc)
        return GATE_UNAVAILABLE


def build_gate(config: Optional[dict]) -> Optional[NormalcyGate]:
    if not config:
        return None
    kind = config.get("kind")
    if kind == "static-verdicts":
        return StaticVerdictGate.from_file(config["path"])
    if kind == "remote":
        return RemoteVerdictGate(config["endpoint"], timeout=float(config.get("timeout", 10.0)))
    raise InvalidConfigError(f"unknown gate kind: {kind!r}")
