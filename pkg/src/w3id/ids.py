"""W3ID generation and verification.

A W3ID is ``sha256(ASCII(timestamp) || object bytes)`` rendered as 64
lowercase hex characters. The timestamp is stored next to the id (the
sidecar record) because verification has to rebuild the preimage.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from typing import BinaryIO

from .errors import MalformedId, MalformedRecord, MalformedTimestamp
from .objects import CanonicalObject, iter_chunks
from .timestamps import MonotonicIssuer, Timestamp, default_issuer, parse

FORMAT_VERSION = 1
W3ID_LENGTH = 64

_HEX64 = re.compile(r"[0-9a-f]{64}")
SIDECAR_FIELDS = ("version", "w3id", "timestamp")


def check_w3id(w3id: str) -> str:
    if not isinstance(w3id, str) or not _HEX64.fullmatch(w3id):
        raise MalformedId(f"w3id must be {W3ID_LENGTH} lowercase hex characters: {w3id!r}")
    return w3id


@dataclass(frozen=True)
class IdRecord:
    w3id: str
    timestamp: Timestamp
    version: int = FORMAT_VERSION

    def __post_init__(self):
        check_w3id(self.w3id)
        if not isinstance(self.timestamp, Timestamp):
            raise MalformedRecord(f"timestamp must be a Timestamp, got {type(self.timestamp).__name__}")
        if self.version != FORMAT_VERSION:
            raise MalformedRecord(f"unsupported record version {self.version!r}")

    def to_dict(self) -> dict:
        return {"version": self.version, "w3id": self.w3id, "timestamp": self.timestamp.format()}

    def to_json(self) -> str:
        """Single-line sidecar JSON with members in a fixed order."""
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d) -> IdRecord:
        if not isinstance(d, dict):
            raise MalformedRecord("sidecar record must be a JSON object")
        if set(d) != set(SIDECAR_FIELDS):
            raise MalformedRecord(f"sidecar members must be exactly {SIDECAR_FIELDS}, got {sorted(d)}")
        version = d["version"]
        # bool is an int subclass; true must not pass as version 1
        if type(version) is not int:
            raise MalformedRecord(f"version must be an integer, got {version!r}")
        try:
            return cls(check_w3id(d["w3id"]), parse(d["timestamp"]), version)
        except (MalformedId, MalformedTimestamp) as exc:
            raise MalformedRecord(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str | bytes) -> IdRecord:
        try:
            d = json.loads(text)
        except (ValueError, UnicodeDecodeError) as exc:
            raise MalformedRecord(f"invalid JSON: {exc}") from exc
        return cls.from_dict(d)


def build_preimage(ts: Timestamp, obj: CanonicalObject) -> bytes:
    return ts.to_bytes() + obj.data


def _hasher(ts: Timestamp):
    h = hashlib.sha256()
    h.update(ts.to_bytes())
    return h


def generate(ts: Timestamp, obj: CanonicalObject) -> IdRecord:
    # hash the two parts separately so the preimage is never copied
    h = _hasher(ts)
    h.update(obj.data)
    return IdRecord(h.hexdigest(), ts)


def generate_stream(ts: Timestamp, stream: BinaryIO) -> IdRecord:
    """Like :func:`generate` but reads the object from a binary stream in chunks."""
    h = _hasher(ts)
    for chunk in iter_chunks(stream):
        h.update(chunk)
    return IdRecord(h.hexdigest(), ts)


def generate_now(obj: CanonicalObject, issuer: MonotonicIssuer | None = None) -> IdRecord:
    if issuer is None:
        issuer = default_issuer()
    return generate(issuer.next(), obj)


def recompute_matches(record: IdRecord, obj: CanonicalObject) -> bool:
    check_w3id(record.w3id)
    return generate(record.timestamp, obj).w3id == record.w3id
