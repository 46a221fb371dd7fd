"""HTTP API over the registry.

Routes::

    POST /v1/ids                      raw body -> 201 {w3id, public_key, private_key, timestamp}
    GET  /v1/ids/{public_key}         -> 200 registry record without private_digest
    POST /v1/verify?public_key&timestamp   raw body -> 200 {verified}
    POST /v1/authenticate             {public_key, private} -> 200 {authenticated}
    GET  /v1/duplicates/{digest}      -> 200 {public_keys}

Errors are always ``{"error": CODE, "message": text}``. The private key is
returned once, in the 201 response that creates it, and is never logged.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .auth import check_key, public_verify, split
from .errors import (
    ClockUnavailable,
    DuplicateId,
    MalformedInput,
    NotFound,
    StorageFailure,
    TimestampOverflow,
    VerificationFailed,
    W3IDError,
)
from .ids import generate_now
from .objects import ingest_bytes
from .registry import Registry
from .timestamps import MonotonicIssuer, default_issuer, parse

logger = logging.getLogger(__name__)

DEFAULT_LISTEN = "127.0.0.1:8000"
DEFAULT_STORE = "w3id-store.jsonl"
DEFAULT_MAX_BODY = 64 * 1024 * 1024

_STATUS = {
    MalformedInput: HTTPStatus.BAD_REQUEST,
    NotFound: HTTPStatus.NOT_FOUND,
    DuplicateId: HTTPStatus.CONFLICT,
    VerificationFailed: HTTPStatus.UNPROCESSABLE_ENTITY,
    StorageFailure: HTTPStatus.INTERNAL_SERVER_ERROR,
    ClockUnavailable: HTTPStatus.SERVICE_UNAVAILABLE,
    TimestampOverflow: HTTPStatus.SERVICE_UNAVAILABLE,
}


def parse_listen(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit() or not 0 <= int(port) <= 65535:
        raise ValueError(f"listen address must be host:port, got {address!r}")
    return host.strip("[]") or "0.0.0.0", int(port)


@dataclass(frozen=True)
class ApiConfig:
    listen_address: str = DEFAULT_LISTEN
    store_path: str = DEFAULT_STORE
    max_body_bytes: int = DEFAULT_MAX_BODY

    def __post_init__(self):
        if self.max_body_bytes <= 0:
            raise ValueError("max_body_bytes must be positive")
        parse_listen(self.listen_address)

    @classmethod
    def from_env(cls, environ=None, **overrides) -> ApiConfig:
        """Read W3ID_LISTEN, W3ID_STORE and W3ID_MAX_BODY; non-None overrides win."""
        env = os.environ if environ is None else environ
        values = {
            "listen_address": env.get("W3ID_LISTEN", DEFAULT_LISTEN),
            "store_path": env.get("W3ID_STORE", DEFAULT_STORE),
            "max_body_bytes": int(env.get("W3ID_MAX_BODY", DEFAULT_MAX_BODY)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class ApiError(Exception):
    def __init__(self, status: HTTPStatus, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class W3IDServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: ApiConfig, registry: Registry, issuer: MonotonicIssuer | None = None):
        self.config = config
        self.registry = registry
        self.issuer = default_issuer() if issuer is None else issuer
        super().__init__(parse_listen(config.listen_address), Handler)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


class Handler(BaseHTTPRequestHandler):
    server: W3IDServer
    server_version = "w3id/0.1"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        logger.info("%s - %s", self.address_string(), fmt % args)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def _dispatch(self, method: str):
        self._consumed = False
        url = urlsplit(self.path)
        parts = [p for p in url.path.split("/") if p]
        try:
            if parts[:1] != ["v1"]:
                raise ApiError(HTTPStatus.NOT_FOUND, "NOT_FOUND", f"no route for {url.path}")
            route = tuple(parts[1:])
            if route == ("ids",):
                handler, allowed = self._create, "POST"
            elif len(route) == 2 and route[0] == "ids":
                handler, allowed = lambda: self._resolve(route[1]), "GET"
            elif route == ("verify",):
                handler, allowed = lambda: self._verify(parse_qs(url.query)), "POST"
            elif route == ("authenticate",):
                handler, allowed = self._authenticate, "POST"
            elif len(route) == 2 and route[0] == "duplicates":
                handler, allowed = lambda: self._duplicates(route[1]), "GET"
            else:
                raise ApiError(HTTPStatus.NOT_FOUND, "NOT_FOUND", f"no route for {url.path}")
            if method != allowed:
                raise ApiError(HTTPStatus.METHOD_NOT_ALLOWED, "METHOD_NOT_ALLOWED", f"use {allowed}")
            status, body = handler()
        except ApiError as exc:
            status, body = exc.status, {"error": exc.code, "message": exc.message}
        except W3IDError as exc:
            status = next((s for cls, s in _STATUS.items() if isinstance(exc, cls)),
                          HTTPStatus.INTERNAL_SERVER_ERROR)
            body = {"error": exc.code, "message": str(exc)}
        except Exception:
            logger.exception("unhandled error")
            status = HTTPStatus.INTERNAL_SERVER_ERROR
            body = {"error": "INTERNAL", "message": "internal server error"}
        if not self._consumed and self.headers.get("Content-Length", "0") != "0":
            # an unread body would be parsed as the next request on this connection
            self.close_connection = True
        self._send(status, body)

    def _send(self, status: HTTPStatus, body: dict):
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(payload)))
        if self.close_connection:
            self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(payload)

    def _body_length(self) -> int:
        if "chunked" in self.headers.get("Transfer-Encoding", "").lower():
            self.close_connection = True
            raise ApiError(HTTPStatus.LENGTH_REQUIRED, "LENGTH_REQUIRED", "send a Content-Length body")
        raw = self.headers.get("Content-Length", "0")
        if not raw.isdigit():
            self.close_connection = True
            raise ApiError(HTTPStatus.BAD_REQUEST, "BAD_REQUEST", "invalid Content-Length")
        length = int(raw)
        limit = self.server.config.max_body_bytes
        if length > limit:
            raise ApiError(HTTPStatus.REQUEST_ENTITY_TOO_LARGE, "BODY_TOO_LARGE",
                           f"body of {length} bytes exceeds limit of {limit}")
        return length

    def _read_body(self, length: int) -> bytes:
        data = self.rfile.read(length)
        self._consumed = True
        if len(data) != length:
            self.close_connection = True
            raise ApiError(HTTPStatus.BAD_REQUEST, "BAD_REQUEST", "truncated body")
        return data

    def _read_json(self) -> dict:
        try:
            body = json.loads(self._read_body(self._body_length()))
        except (ValueError, UnicodeDecodeError):
            raise ApiError(HTTPStatus.BAD_REQUEST, "BAD_REQUEST", "body must be JSON") from None
        if not isinstance(body, dict):
            raise ApiError(HTTPStatus.BAD_REQUEST, "BAD_REQUEST", "body must be a JSON object")
        return body

    def _create(self):
        obj = ingest_bytes(self._read_body(self._body_length()))
        platform = self.headers.get("X-Platform", "")
        location = self.headers.get("X-Location-URI", "")
        record = generate_now(obj, self.server.issuer)
        self.server.registry.register(record, obj, platform, location)
        keys = split(record.w3id)
        return HTTPStatus.CREATED, {
            "w3id": record.w3id,
            "public_key": keys.public_key,
            "private_key": keys.private_key,
            "timestamp": record.timestamp.format(),
        }

    def _resolve(self, public_key: str):
        return HTTPStatus.OK, self.server.registry.resolve(public_key).public_dict()

    def _verify(self, query: dict):
        length = self._body_length()
        public_key = query.get("public_key", [""])[0]
        timestamp = query.get("timestamp", [""])[0]
        check_key(public_key)
        ts = parse(timestamp)
        obj = ingest_bytes(self._read_body(length))
        return HTTPStatus.OK, {"verified": public_verify(obj, ts, public_key)}

    def _authenticate(self):
        body = self._read_json()
        public_key, private = body.get("public_key"), body.get("private")
        if not isinstance(public_key, str) or not isinstance(private, str):
            raise ApiError(HTTPStatus.BAD_REQUEST, "BAD_REQUEST",
                           "body must carry string members public_key and private")
        return HTTPStatus.OK, {"authenticated": self.server.registry.authenticate(public_key, private)}

    def _duplicates(self, digest: str):
        return HTTPStatus.OK, {"public_keys": self.server.registry.find_duplicates(digest)}


def make_server(config: ApiConfig, registry: Registry | None = None,
                issuer: MonotonicIssuer | None = None) -> W3IDServer:
    """Bind (but do not start) a server. Raises OSError if the address is taken."""
    if registry is None:
        registry = Registry(config.store_path)
    try:
        return W3IDServer(config, registry, issuer)
    except BaseException:
        registry.close()
        raise
