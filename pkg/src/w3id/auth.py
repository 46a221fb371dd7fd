"""Public/private halves of a W3ID.

The first 32 hex characters identify an object publicly; the last 32 act
as a possession token. Note that these are not asymmetric keys: anyone who
holds the object bytes and the timestamp can recompute the whole hash,
private half included.
"""

from __future__ import annotations

import hmac
import re
from dataclasses import dataclass

from .errors import MalformedId, MalformedKey
from .ids import check_w3id, generate
from .objects import CanonicalObject
from .timestamps import Timestamp

KEY_LENGTH = 32
_HEX32 = re.compile(r"[0-9a-f]{32}")


def check_key(key: str) -> str:
    if not isinstance(key, str) or not _HEX32.fullmatch(key):
        raise MalformedKey(f"key must be {KEY_LENGTH} lowercase hex characters: {key!r}")
    return key


@dataclass(frozen=True)
class KeyPair:
    public_key: str
    private_key: str

    def __post_init__(self):
        check_key(self.public_key)
        check_key(self.private_key)

    @property
    def w3id(self) -> str:
        return self.public_key + self.private_key


def split(w3id: str) -> KeyPair:
    check_w3id(w3id)
    return KeyPair(w3id[:KEY_LENGTH], w3id[KEY_LENGTH:])


def private_half(presented: str) -> str:
    """Accept either the 32-char private key or the full 64-char hash."""
    if isinstance(presented, str) and len(presented) == 2 * KEY_LENGTH:
        try:
            return split(presented).private_key
        except MalformedId as exc:
            raise MalformedKey(str(exc)) from None
    return check_key(presented)


def public_verify(obj: CanonicalObject, ts: Timestamp, public_key: str) -> bool:
    check_key(public_key)
    return split(generate(ts, obj).w3id).public_key == public_key


def private_authenticate(presented: str, reference_private: str) -> bool:
    check_key(reference_private)
    candidate = private_half(presented)
    return hmac.compare_digest(candidate.encode("ascii"), reference_private.encode("ascii"))
