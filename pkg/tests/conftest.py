import json
import sys
import threading
import urllib.error
import urllib.request
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from w3id.api import ApiConfig, make_server  # noqa: E402
from w3id.registry import Registry  # noqa: E402
from w3id.timestamps import MonotonicIssuer  # noqa: E402

PAPER_INSTANT = datetime(2023, 5, 3, 19, 47, 15, 925404, tzinfo=timezone.utc)


class FrozenClock:
    def __init__(self, at=PAPER_INSTANT):
        self.at = at
        self.calls = 0

    def __call__(self):
        self.calls += 1
        return self.at

    def step(self, **delta):
        self.at += timedelta(**delta)


@pytest.fixture
def frozen_clock():
    return FrozenClock()


@pytest.fixture
def frozen_issuer(frozen_clock):
    return MonotonicIssuer(frozen_clock)


@pytest.fixture
def store_path(tmp_path):
    return tmp_path / "store.jsonl"


@pytest.fixture
def registry(store_path):
    with Registry(store_path, fsync=False) as reg:
        yield reg


class Client:
    """Tiny urllib client that returns (status, parsed JSON) for every response."""

    def __init__(self, base):
        self.base = base
        self.bodies = []

    def request(self, method, path, data=None, headers=None):
        req = urllib.request.Request(self.base + path, data=data, method=method, headers=headers or {})
        try:
            with urllib.request.urlopen(req, timeout=10) as resp:
                status, raw = resp.status, resp.read()
        except urllib.error.HTTPError as exc:
            status, raw = exc.code, exc.read()
        self.bodies.append(raw)
        return status, json.loads(raw)

    def get(self, path):
        return self.request("GET", path)

    def post(self, path, data=b"", headers=None):
        return self.request("POST", path, data=data, headers=headers)


@pytest.fixture
def server_factory(tmp_path):
    started = []

    def start(store=None, max_body=1024 * 1024, issuer=None):
        config = ApiConfig("127.0.0.1:0", str(store or tmp_path / "api-store.jsonl"), max_body)
        server = make_server(config, Registry(config.store_path, fsync=False), issuer)
        thread = threading.Thread(target=server.serve_forever, args=(0.05,), daemon=True)
        thread.start()
        started.append(server)
        return server, Client(server.url)

    def stop(server):
        server.shutdown()
        server.server_close()
        server.registry.close()
        started.remove(server)

    start.stop = stop
    yield start
    for server in list(started):
        stop(server)


@pytest.fixture
def api(server_factory):
    server, client = server_factory()
    client.server = server
    return client


# acceptance summary: one line per criterion

_criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        ok = call.excinfo is None
        prev = _criteria.get(n, (True, ""))
        _criteria[n] = (prev[0] and ok, marker.kwargs.get("title", prev[1]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, title = _criteria[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {title}")
