"""Quadruple W3IDs: four independent ids over one object, issued in time order.

Each record hashes only its own timestamp and the object; records are not
chained through earlier hashes. Validation re-derives every record and
checks that the timestamps strictly increase.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence

from .errors import MalformedChain, MalformedRecord
from .ids import IdRecord, generate, recompute_matches
from .objects import CanonicalObject
from .timestamps import MonotonicIssuer, default_issuer

CHAIN_LENGTH = 4
WINDOW = 3


class Policy(enum.Enum):
    ALL_FOUR = "all"
    THREE_CONSECUTIVE = "three"


@dataclass(frozen=True)
class QuadChain:
    records: tuple[IdRecord, ...]

    def __post_init__(self):
        records = tuple(self.records)
        if len(records) != CHAIN_LENGTH:
            raise MalformedChain(f"a chain has exactly {CHAIN_LENGTH} records, got {len(records)}")
        if not all(isinstance(r, IdRecord) for r in records):
            raise MalformedChain("chain members must be IdRecords")
        object.__setattr__(self, "records", records)

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.records], indent=2)

    @classmethod
    def from_json(cls, text: str | bytes) -> QuadChain:
        try:
            items = json.loads(text)
        except (ValueError, UnicodeDecodeError) as exc:
            raise MalformedChain(f"invalid JSON: {exc}") from exc
        if not isinstance(items, list) or len(items) != CHAIN_LENGTH:
            raise MalformedChain(f"chain file must be a JSON array of {CHAIN_LENGTH} records")
        try:
            return cls(tuple(IdRecord.from_dict(d) for d in items))
        except MalformedRecord as exc:
            raise MalformedChain(f"malformed chain member: {exc}") from exc


@dataclass(frozen=True)
class ChainReport:
    per_record_match: tuple[bool, ...]
    causality_ok: bool
    accepted: bool
    policy: Policy


def generate_chain(obj: CanonicalObject, issuer: MonotonicIssuer | None = None) -> QuadChain:
    if issuer is None:
        issuer = default_issuer()
    return QuadChain(tuple(generate(issuer.next(), obj) for _ in range(CHAIN_LENGTH)))


def causality_ok(records: Sequence[IdRecord]) -> bool:
    # 20-digit strings sort chronologically
    stamps = [r.timestamp.format() for r in records]
    return all(a < b for a, b in zip(stamps, stamps[1:]))


def policy_accepts(matches: Sequence[bool], policy: Policy) -> bool:
    if policy is Policy.ALL_FOUR:
        return all(matches)
    return any(all(matches[i:i + WINDOW]) for i in range(len(matches) - WINDOW + 1))


def validate_chain(
    chain: QuadChain, obj: CanonicalObject, policy: Policy = Policy.ALL_FOUR
) -> ChainReport:
    if not isinstance(chain, QuadChain):
        raise MalformedChain(f"expected QuadChain, got {type(chain).__name__}")
    matches = tuple(recompute_matches(r, obj) for r in chain.records)
    causal = causality_ok(chain.records)
    return ChainReport(matches, causal, causal and policy_accepts(matches, policy), Policy(policy))
