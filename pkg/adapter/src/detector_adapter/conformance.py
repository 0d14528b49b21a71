"""Replay recorded wire requests against any provider and report violations.

The transport is a plain callable so the same runner drives a live HTTP
endpoint, a test client, or anything else that can answer a POST. A provider
conforms when every replayed request yields HTTP 200 and a response that
survives the full wire-contract check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import httpx

from .schema import request_violations, response_violations

Transport = Callable[[dict], tuple[int, object]]


@dataclass
class RequestResult:
    image_id: str
    ok: bool
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"image_id": self.image_id, "ok": self.ok, "violations": self.violations}


@dataclass
class ConformanceReport:
    results: list[RequestResult]

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def failure_count(self) -> int:
        return sum(not r.ok for r in self.results)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "total": len(self.results),
            "failures": self.failure_count,
            "results": [r.to_dict() for r in self.results],
        }


def check_exchange(request_body: dict, status: int, response_body: object) -> list[str]:
    """All violations for one request/response pair; empty means conformant."""
    problems = request_violations(request_body)
    if problems:
        # A broken fixture is a finding too: the replay file itself must speak the protocol.
        return problems
    if status != 200:
        return [f"status: expected 200, got {status}"]
    frame = [float(v) for v in request_body["canonical_frame"]]
    return response_violations(response_body, request_body["image_id"], frame)


def run_conformance(requests: list[dict], transport: Transport) -> ConformanceReport:
    results = []
    for body in requests:
        status, response_body = transport(body)
        violations = check_exchange(body, status, response_body)
        results.append(
            RequestResult(
                image_id=str(body.get("image_id", "<missing>")),
                ok=not violations,
                violations=violations,
            )
        )
    return ConformanceReport(results=results)


def http_transport(endpoint: str, timeout: float = 10.0) -> Transport:
    def post(body: dict) -> tuple[int, object]:
        try:
            response = httpx.post(endpoint, json=body, timeout=timeout)
        except httpx.HTTPError as exc:
            return 0, {"error": {"code": "transport", "message": str(exc)}}
        try:
            return response.status_code, response.json()
        except json.JSONDecodeError:
            return response.status_code, {"error": {"code": "not-json", "message": response.text[:200]}}

    return post


def replay_file(requests_path: str, endpoint: str, timeout: float = 10.0) -> ConformanceReport:
    with open(requests_path, encoding="utf-8") as fh:
        requests = json.load(fh)
    return run_conformance(requests, http_transport(endpoint, timeout))
