from __future__ import annotations

import hashlib
import json
from typing import Any

from pydantic import BaseModel


def stable_hash_dict(value: dict[str, Any]) -> str:
    payload = json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def config_hash(model: BaseModel, length: int = 12, exclude: set[str] | None = None, **extra: Any) -> str:
    """Short, order-independent hash of a pydantic config (run-time overrides included)."""
    payload = model.model_dump(mode="json", exclude=exclude)
    payload.update(extra)
    return stable_hash_dict(payload)[:length]
