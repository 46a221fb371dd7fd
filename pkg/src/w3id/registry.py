"""DOI-style resolver for registered W3IDs.

Records live in an append-only newline-delimited JSON log; the in-memory
indexes (by public key and by content digest) are rebuilt on open. The
private half of an id is only ever stored as its SHA-256 digest.
"""

from __future__ import annotations

import fcntl
import hashlib
import hmac
import json
import logging
import os
import re
import threading
from dataclasses import asdict, dataclass
from pathlib import Path

from .auth import check_key, private_half, split
from .errors import (
    DuplicateId,
    MalformedInput,
    MalformedKey,
    MalformedTimestamp,
    NotFound,
    StorageFailure,
    VerificationFailed,
)
from .ids import IdRecord, recompute_matches
from .objects import CanonicalObject, content_digest
from .timestamps import Clock, MonotonicIssuer, Timestamp, parse, system_clock

logger = logging.getLogger(__name__)

STORE_FIELDS = (
    "public_key", "private_digest", "timestamp", "content_digest",
    "platform", "location_uri", "created_at",
)
MAX_LABEL_LENGTH = 256
_HEX64 = re.compile(r"[0-9a-f]{64}")


def check_digest(digest: str) -> str:
    if not isinstance(digest, str) or not _HEX64.fullmatch(digest):
        raise MalformedKey(f"digest must be 64 lowercase hex characters: {digest!r}")
    return digest


def _check_label(name: str, value) -> str:
    if not isinstance(value, str) or len(value) > MAX_LABEL_LENGTH or not value.isprintable():
        raise MalformedInput(f"{name} must be printable text of at most {MAX_LABEL_LENGTH} characters")
    return value


def digest_private(private: str) -> str:
    return hashlib.sha256(private.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class RegistryRecord:
    public_key: str
    private_digest: str
    timestamp: Timestamp
    content_digest: str
    platform: str
    location_uri: str
    created_at: Timestamp

    def to_dict(self) -> dict:
        d = asdict(self)
        d["timestamp"] = self.timestamp.format()
        d["created_at"] = self.created_at.format()
        return d

    def public_dict(self) -> dict:
        """The record as shown to anyone resolving it."""
        d = self.to_dict()
        del d["private_digest"]
        return d

    @classmethod
    def from_dict(cls, d) -> RegistryRecord:
        if not isinstance(d, dict) or set(d) != set(STORE_FIELDS):
            got = sorted(d) if isinstance(d, dict) else type(d).__name__
            raise ValueError(f"store record members must be exactly {STORE_FIELDS}, got {got}")
        try:
            return cls(
                public_key=check_key(d["public_key"]),
                private_digest=check_digest(d["private_digest"]),
                timestamp=parse(d["timestamp"]),
                content_digest=check_digest(d["content_digest"]),
                platform=_check_label("platform", d["platform"]),
                location_uri=_check_label("location_uri", d["location_uri"]),
                created_at=parse(d["created_at"]),
            )
        except (MalformedKey, MalformedTimestamp, MalformedInput) as exc:
            raise ValueError(str(exc)) from exc


class Registry:
    """Single-writer store. One process may hold a given store file at a time."""

    def __init__(self, path: str | os.PathLike, clock: Clock = system_clock, fsync: bool = True):
        self.path = Path(path)
        self.fsync = fsync
        self._issuer = MonotonicIssuer(clock)
        self._lock = threading.Lock()
        self._by_key: dict[str, RegistryRecord] = {}
        self._by_content: dict[str, list[str]] = {}
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a+b")
        except OSError as exc:
            raise StorageFailure(f"cannot open store {self.path}: {exc}") from exc
        try:
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            self._fh.close()
            raise StorageFailure(f"store {self.path} is locked by another process") from None
        try:
            self._replay()
        except BaseException:
            self.close()
            raise

    def _replay(self):
        self._fh.seek(0)
        raw = self._fh.read()
        good_end = 0
        lines = raw.split(b"\n")
        # a write torn by a crash leaves a final line without its newline
        tail = lines.pop()
        for lineno, line in enumerate(lines, 1):
            try:
                record = RegistryRecord.from_dict(json.loads(line.decode("utf-8")))
            except ValueError as exc:
                raise StorageFailure(f"{self.path}:{lineno}: corrupt record: {exc}") from None
            if record.public_key in self._by_key:
                raise StorageFailure(f"{self.path}:{lineno}: duplicate public key {record.public_key}")
            self._index(record)
            good_end += len(line) + 1
        if tail:
            logger.warning("discarding %d bytes of incomplete record at end of %s", len(tail), self.path)
            self._fh.truncate(good_end)
        self._fh.seek(0, os.SEEK_END)
        if self._by_key:
            self._issuer.observe(max(r.created_at for r in self._by_key.values()))

    def _index(self, record: RegistryRecord):
        self._by_key[record.public_key] = record
        self._by_content.setdefault(record.content_digest, []).append(record.public_key)

    def close(self):
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __len__(self):
        return len(self._by_key)

    def __contains__(self, public_key):
        return public_key in self._by_key

    def register(
        self,
        id_record: IdRecord,
        obj: CanonicalObject,
        platform: str = "",
        location_uri: str = "",
    ) -> RegistryRecord:
        _check_label("platform", platform)
        _check_label("location_uri", location_uri)
        if not recompute_matches(id_record, obj):
            raise VerificationFailed(f"id {id_record.w3id} does not match the supplied object")
        keys = split(id_record.w3id)
        digest = content_digest(obj)
        with self._lock:
            if keys.public_key in self._by_key:
                raise DuplicateId(f"public key {keys.public_key} is already registered")
            record = RegistryRecord(
                public_key=keys.public_key,
                private_digest=digest_private(keys.private_key),
                timestamp=id_record.timestamp,
                content_digest=digest,
                platform=platform,
                location_uri=location_uri,
                created_at=self._issuer.next(),
            )
            line = json.dumps(record.to_dict(), separators=(",", ":")) + "\n"
            try:
                self._fh.write(line.encode("utf-8"))
                self._fh.flush()
                if self.fsync:
                    os.fsync(self._fh.fileno())
            except (OSError, ValueError) as exc:
                raise StorageFailure(f"write to {self.path} failed: {exc}") from exc
            self._index(record)
        return record

    def resolve(self, public_key: str) -> RegistryRecord:
        check_key(public_key)
        try:
            return self._by_key[public_key]
        except KeyError:
            raise NotFound(f"no record for public key {public_key}") from None

    def authenticate(self, public_key: str, presented_private: str) -> bool:
        record = self.resolve(public_key)
        candidate = digest_private(private_half(presented_private))
        return hmac.compare_digest(candidate.encode("ascii"), record.private_digest.encode("ascii"))

    def find_duplicates(self, content_digest: str) -> list[str]:
        check_digest(content_digest)
        with self._lock:
            keys = list(self._by_content.get(content_digest, ()))
        # log order breaks created_at ties left by records from older processes
        return sorted(keys, key=lambda k: self._by_key[k].created_at)
