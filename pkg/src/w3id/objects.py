"""Ingestion of arbitrary digital objects as raw bytes."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import BinaryIO, Iterable

CHUNK_SIZE = 1 << 20


@dataclass(frozen=True)
class CanonicalObject:
    """An object exactly as submitted. No normalization is ever applied."""

    data: bytes

    @property
    def length(self) -> int:
        return len(self.data)

    def __bytes__(self) -> bytes:
        return self.data


def ingest_bytes(raw: bytes | bytearray | memoryview) -> CanonicalObject:
    return CanonicalObject(bytes(raw))


def ingest_stream(stream: BinaryIO) -> CanonicalObject:
    return CanonicalObject(stream.read())


def to_hex(obj: CanonicalObject) -> str:
    return obj.data.hex()


def from_hex(text: str) -> CanonicalObject:
    """Inverse of :func:`to_hex`. Only lowercase hex is accepted."""
    if text != text.lower():
        raise ValueError("hex must be lowercase")
    return CanonicalObject(bytes.fromhex(text))


def content_digest(obj: CanonicalObject) -> str:
    """SHA-256 of the object bytes alone; used for duplicate detection."""
    return hashlib.sha256(obj.data).hexdigest()


def iter_chunks(stream: BinaryIO, size: int = CHUNK_SIZE) -> Iterable[bytes]:
    while True:
        chunk = stream.read(size)
        if not chunk:
            return
        yield chunk


def content_digest_stream(stream: BinaryIO) -> str:
    h = hashlib.sha256()
    for chunk in iter_chunks(stream):
        h.update(chunk)
    return h.hexdigest()
