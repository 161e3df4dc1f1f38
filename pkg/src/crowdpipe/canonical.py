"""Canonical serialization and content fingerprints.

Cache keys, idempotency fingerprints, and the store file all depend on one
byte-exact encoding: UTF-8 JSON with lexicographically sorted keys and no
insignificant whitespace. Two runs (or two machines) that serialize the same
value must produce the same bytes, so fingerprints are portable across
store files.
"""

from __future__ import annotations

import hashlib
import json
import re
from datetime import datetime, timezone
from typing import Any

IDENT_RE = re.compile(r"^[A-Za-z0-9_-]+$")

FINGERPRINT_RE = re.compile(r"^[0-9a-f]{64}$")


def canonical_json(value: Any) -> str:
    """Serialize ``value`` to canonical JSON text.

    Keys sorted, separators without whitespace, non-ASCII kept as UTF-8,
    NaN/Infinity rejected (they are not JSON).
    """
    return json.dumps(
        value,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def canonical_bytes(value: Any) -> bytes:
    return canonical_json(value).encode("utf-8")


def fingerprint(value: Any) -> str:
    """Lowercase hex SHA-256 of the canonical serialization of ``value``."""
    return hashlib.sha256(canonical_bytes(value)).hexdigest()


def is_fingerprint(text: str) -> bool:
    return bool(FINGERPRINT_RE.match(text))


def is_identifier(text: str) -> bool:
    """True for non-empty filesystem-safe names ([A-Za-z0-9_-]+)."""
    return bool(IDENT_RE.match(text))


def utc_now_rfc3339() -> str:
    """Current UTC time as RFC 3339 with millisecond precision."""
    return format_rfc3339(datetime.now(timezone.utc))


def format_rfc3339(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def parse_rfc3339(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(
        tzinfo=timezone.utc
    )
