"""Reference adapter for the canonical-frame detection wire protocol."""

from .conformance import ConformanceReport, check_exchange, http_transport, replay_file, run_conformance
from .hooks import ModelHook, RawBox, StaticHook
from .schema import (
    CANONICAL_FRAME,
    REQUEST_SCHEMA,
    RESPONSE_SCHEMA,
    request_violations,
    response_violations,
)
from .server import create_adapter_app, serve_adapter

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_FRAME",
    "ConformanceReport",
    "ModelHook",
    "RawBox",
    "REQUEST_SCHEMA",
    "RESPONSE_SCHEMA",
    "StaticHook",
    "check_exchange",
    "create_adapter_app",
    "http_transport",
    "replay_file",
    "request_violations",
    "response_violations",
    "run_conformance",
    "serve_adapter",
]
