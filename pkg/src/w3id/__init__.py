"""W3ID: timestamped SHA-256 identifiers for digital objects."""

__version__ = "0.1.0"

from .auth import KeyPair, private_authenticate, public_verify, split
from .errors import W3IDError
from .ids import IdRecord, build_preimage, generate, generate_now, generate_stream, recompute_matches
from .objects import CanonicalObject, content_digest, ingest_bytes, to_hex
from .quad import ChainReport, Policy, QuadChain, generate_chain, validate_chain
from .registry import Registry, RegistryRecord
from .timestamps import MonotonicIssuer, Timestamp, now_utc, parse

__all__ = [
    "CanonicalObject", "ChainReport", "IdRecord", "KeyPair", "MonotonicIssuer", "Policy",
    "QuadChain", "Registry", "RegistryRecord", "Timestamp", "W3IDError",
    "build_preimage", "content_digest", "generate", "generate_chain", "generate_now",
    "generate_stream", "ingest_bytes", "now_utc", "parse", "private_authenticate",
    "public_verify", "recompute_matches", "split", "to_hex", "validate_chain",
]
