"""Canonical JSON serialization and config hashing.

The CLI and the HTTP service must emit bitwise-identical payloads for
identical queries, so every externally visible JSON document funnels through
canonical_json: sorted keys, no whitespace variance, repr-exact floats.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

__all__ = ["canonical_json", "config_hash"]


def _normalize(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if hasattr(obj, "tolist"):  # numpy scalars and arrays
        return _normalize(obj.tolist())
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            raise ValueError(f"canonical_json: non-finite float {obj!r} is not serializable")
        return obj
    return obj


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, compact separators."""
    return json.dumps(_normalize(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(obj: Any) -> str:
    """Stable hex digest of a JSON-serializable configuration."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]
