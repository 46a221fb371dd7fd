"""Acceptance gate. One test per criterion; the conftest prints a PASS/FAIL line for each.

Time limits are wall-clock bounds on the checked operation, pinned here.
"""

import itertools
import json
import random
import threading
import time
from datetime import datetime, timezone

import cv2
import numpy as np
import pytest

from conftest import FrozenClock
from oracles import PAPER_PRIVATE, PAPER_PUBLIC, PAPER_TIMESTAMP, PAPER_W3ID, w3id_reference
from w3id.auth import public_verify, split
from w3id.cli import main as cli_main
from w3id.errors import DuplicateId
from w3id.ids import IdRecord, generate, generate_now, recompute_matches
from w3id.objects import content_digest, ingest_bytes
from w3id.qr import render_qr
from w3id.quad import Policy, QuadChain, generate_chain, validate_chain
from w3id.registry import Registry
from w3id.timestamps import MonotonicIssuer, Timestamp, parse

criterion = pytest.mark.criterion


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def random_timestamp(rng):
    lo = Timestamp(1, 1, 1).to_datetime()
    hi = Timestamp(9999, 12, 31, 23, 59, 59, 999999).to_datetime()
    return Timestamp.from_datetime(lo + rng.random() * (hi - lo))


def flip_bit(data: bytes, rng) -> bytes:
    buf = bytearray(data)
    i = rng.randrange(len(buf) * 8)
    buf[i // 8] ^= 1 << (i % 8)
    return bytes(buf)


@criterion(1, title="paper timestamp parses and formats bit-exactly (<1 ms)")
def test_c1_paper_timestamp():
    with Timer() as t:
        ts = parse(PAPER_TIMESTAMP)
        text = ts.format()
    assert ts.to_datetime() == datetime(2023, 5, 3, 19, 47, 15, 925404, tzinfo=timezone.utc)
    assert text == PAPER_TIMESTAMP
    assert t.elapsed < 1e-3


@criterion(2, title="paper hash splits into the paper's public/private halves")
def test_c2_paper_split():
    keys = split(PAPER_W3ID)
    assert keys.public_key == PAPER_PUBLIC
    assert keys.private_key == PAPER_PRIVATE
    assert keys.public_key + keys.private_key == PAPER_W3ID


@criterion(3, title="100 random (timestamp, object) pairs match independent SHA-256 (<1 s)")
def test_c3_oracle_equivalence():
    rng = random.Random(3)
    cases = [(random_timestamp(rng), rng.randbytes(rng.randrange(0, 257))) for _ in range(100)]
    with Timer() as t:
        mismatches = sum(
            generate(ts, ingest_bytes(raw)).w3id != w3id_reference(ts.format(), raw) for ts, raw in cases
        )
    assert mismatches == 0
    assert t.elapsed < 1.0


@criterion(4, title="10,000 generate_now calls: distinct ids, strictly increasing timestamps (<5 s)")
@pytest.mark.parametrize("clock", ["real", "frozen"])
def test_c4_uniqueness(clock):
    issuer = MonotonicIssuer() if clock == "real" else MonotonicIssuer(FrozenClock())
    obj = ingest_bytes(b"one object")
    with Timer() as t:
        records = [generate_now(obj, issuer) for _ in range(10_000)]
    assert len({r.w3id for r in records}) == 10_000
    stamps = [r.timestamp.format() for r in records]
    assert all(a < b for a, b in zip(stamps, stamps[1:]))
    assert t.elapsed < 5.0


@criterion(5, title="avalanche: mean differing hex fraction over 1,000 bit flips in [0.85, 1.0] (<5 s)")
def test_c5_avalanche():
    rng = random.Random(5)
    fractions = []
    with Timer() as t:
        for _ in range(1000):
            ts = random_timestamp(rng)
            raw = rng.randbytes(rng.randrange(1, 129))
            a = generate(ts, ingest_bytes(raw)).w3id
            b = generate(ts, ingest_bytes(flip_bit(raw, rng))).w3id
            fractions.append(sum(x != y for x, y in zip(a, b)) / 64)
    mean = sum(fractions) / len(fractions)
    print(f"avalanche mean differing fraction = {mean:.4f}")
    assert 0.85 <= mean <= 1.0
    assert t.elapsed < 5.0


@criterion(6, title="single-byte tamper rejected by recompute_matches, public_verify and cmd_verify")
def test_c6_tamper_detection(tmp_path, capsys):
    rng = random.Random(6)
    issuer = MonotonicIssuer()
    false_accepts = 0
    path = tmp_path / "obj.bin"
    for _ in range(100):
        raw = rng.randbytes(rng.randrange(1, 200))
        rec = generate_now(ingest_bytes(raw), issuer)
        buf = bytearray(raw)
        i = rng.randrange(len(buf))
        buf[i] ^= rng.randrange(1, 256)
        tampered = ingest_bytes(bytes(buf))
        public_key = split(rec.w3id).public_key
        false_accepts += recompute_matches(rec, tampered)
        false_accepts += public_verify(tampered, rec.timestamp, public_key)
        path.write_bytes(tampered.data)
        code = cli_main(["verify", str(path), "--public-key", public_key,
                         "--timestamp", rec.timestamp.format()])
        false_accepts += code != 1
    capsys.readouterr()
    assert false_accepts == 0


@criterion(7, title="quad chain: permutations break causality; corruption window rule (<1 s)")
def test_c7_quad_chain():
    obj = ingest_bytes(b"quad acceptance")
    with Timer() as t:
        chain = generate_chain(obj, MonotonicIssuer())
        assert validate_chain(chain, obj, Policy.ALL_FOUR).accepted

        for perm in itertools.permutations(range(4)):
            permuted = QuadChain(tuple(chain.records[i] for i in perm))
            for policy in Policy:
                report = validate_chain(permuted, obj, policy)
                if perm == (0, 1, 2, 3):
                    assert report.accepted and report.causality_ok
                else:
                    assert not report.causality_ok and not report.accepted

        for pos in range(4):
            records = list(chain.records)
            w = records[pos].w3id
            records[pos] = IdRecord(("0" if w[0] != "0" else "1") + w[1:], records[pos].timestamp)
            corrupted = QuadChain(tuple(records))
            three = validate_chain(corrupted, obj, Policy.THREE_CONSECUTIVE)
            assert three.accepted == (pos in (0, 3))
            assert not three.per_record_match[pos]
            assert not validate_chain(corrupted, obj, Policy.ALL_FOUR).accepted
    assert t.elapsed < 1.0


@criterion(8, title="registry: round-trip, 1 of 8 concurrent duplicates wins, restart, no plaintext private (<10 s)")
def test_c8_registry(tmp_path):
    store = tmp_path / "registry.jsonl"
    issuer = MonotonicIssuer()
    privates = []
    with Timer() as t:
        with Registry(store) as reg:
            obj = ingest_bytes(b"registry acceptance")
            rec = generate_now(obj, issuer)
            stored = reg.register(rec, obj, "platform-x", "https://example.org/obj")
            privates.append(split(rec.w3id).private_key)
            again = reg.resolve(stored.public_key)
            assert again == stored
            assert (again.timestamp, again.content_digest, again.platform, again.location_uri) == (
                rec.timestamp, content_digest(obj), "platform-x", "https://example.org/obj")

            race_obj = ingest_bytes(b"race")
            race = generate_now(race_obj, issuer)
            privates.append(split(race.w3id).private_key)
            barrier = threading.Barrier(8)
            outcomes = []

            def attempt():
                barrier.wait()
                try:
                    reg.register(race, race_obj)
                    outcomes.append("registered")
                except DuplicateId:
                    outcomes.append("DUPLICATE_ID")

            threads = [threading.Thread(target=attempt) for _ in range(8)]
            for th in threads:
                th.start()
            for th in threads:
                th.join()
            assert outcomes.count("registered") == 1
            assert outcomes.count("DUPLICATE_ID") == 7

        with Registry(store) as reg:
            assert reg.resolve(stored.public_key) == stored
            assert reg.resolve(split(race.w3id).public_key).content_digest == content_digest(race_obj)

    raw = store.read_bytes()
    for p in privates:
        assert p.encode() not in raw
    assert t.elapsed < 10.0


@criterion(9, title="API: POST /v1/ids recomputes via oracle; private key never seen again")
def test_c9_api(api):
    body = b"api acceptance bytes"
    status, created = api.post("/v1/ids", body)
    assert status == 201
    assert created["w3id"] == w3id_reference(created["timestamp"], body)
    assert created["public_key"] + created["private_key"] == created["w3id"]

    private = created["private_key"].encode()
    api.get(f"/v1/ids/{created['public_key']}")
    api.post(f"/v1/verify?public_key={created['public_key']}&timestamp={created['timestamp']}", body)
    api.post("/v1/authenticate",
             json.dumps({"public_key": created["public_key"], "private": created["private_key"]}).encode())
    api.get(f"/v1/duplicates/{content_digest(ingest_bytes(body))}")
    for later in api.bodies[1:]:
        assert private not in later
    with open(api.server.config.store_path, "rb") as fh:
        assert private not in fh.read()


def decode(modules):
    grid = np.pad(np.array(modules, dtype=np.uint8), 4)
    image = np.kron(((1 - grid) * 255).astype(np.uint8), np.ones((8, 8), dtype=np.uint8))
    return cv2.QRCodeDetectorAruco().detectAndDecode(image)[0]


@criterion(10, title="QR: 100 random w3ids decode exactly with an independent decoder")
def test_c10_qr():
    rng = random.Random(10)
    texts = ["%064x" % rng.getrandbits(256) for _ in range(100)]
    mismatches = [t for t in texts if decode(render_qr(t).modules) != t]
    assert mismatches == []
