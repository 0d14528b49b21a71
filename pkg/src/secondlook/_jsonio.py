"""Canonical JSON serialization: identical inputs must yield identical bytes."""

from __future__ import annotations

import json
import math
import os
from pathlib import Path


def round_half_up(x: float) -> int:
    """Conventional rounding (2.5 -> 3), unlike Python's banker's round()."""
    return int(math.floor(x + 0.5))


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def canonical_dumps_compact(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_json(path: str | Path, obj) -> None:
    """Atomic write: the target never holds a partial document."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(canonical_dumps(obj), encoding="utf-8")
    os.replace(tmp, path)


def read_json(path: str | Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
