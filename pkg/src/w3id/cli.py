"""Command-line interface.

Exit codes: 0 success/verified, 1 verification failed (or not found),
2 I/O error, 3 malformed input, 4 service startup failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import urllib.error
import urllib.request
from pathlib import Path
from urllib.parse import quote

from . import __version__
from .api import ApiConfig, make_server
from .auth import check_key, split
from .errors import MalformedInput, StorageFailure, W3IDError
from .ids import IdRecord, generate_stream
from .objects import ingest_bytes
from .qr import EC_LEVELS, render_qr
from .quad import Policy, QuadChain, generate_chain, validate_chain
from .timestamps import default_issuer, parse

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_IO = 2
EXIT_MALFORMED = 3
EXIT_STARTUP = 4


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_MALFORMED, f"{self.prog}: error: {message}\n")


def _open_input(path: str):
    if path == "-":
        return sys.stdin.buffer
    try:
        return open(path, "rb")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from None


def _read_input(path: str) -> bytes:
    fh = _open_input(path)
    try:
        return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from None
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None


def _write_output(path: str, data: bytes):
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}", EXIT_IO) from None


def _write_qr(w3id: str, path: str, ec_level: str):
    symbol = render_qr(w3id, ec_level)
    if path.lower().endswith(".png"):
        _write_output(path, symbol.to_png())
    else:
        _write_output(path, symbol.to_ascii().encode("utf-8"))


def cmd_gen(args) -> int:
    ts = parse(args.timestamp) if args.timestamp else default_issuer().next()
    fh = _open_input(args.file)
    try:
        record = generate_stream(ts, fh)
    except OSError as exc:
        raise CliError(f"cannot read {args.file}: {exc.strerror}", EXIT_IO) from None
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()
    if args.format == "json":
        print(record.to_json())
    else:
        print(f"w3id      {record.w3id}")
        print(f"timestamp {record.timestamp.format()}")
    if args.qr:
        _write_qr(record.w3id, args.qr, args.ec)
    return EXIT_OK


def cmd_split(args) -> int:
    keys = split(args.w3id)
    print(f"public  {keys.public_key}")
    print(f"private {keys.private_key}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.sidecar:
        if args.public_key or args.timestamp:
            raise CliError("--sidecar excludes --public-key/--timestamp", EXIT_MALFORMED)
        expected = IdRecord.from_json(_read_text(args.sidecar))
        ts, compare = expected.timestamp, lambda got: got == expected.w3id
    else:
        if not (args.public_key and args.timestamp):
            raise CliError("give --sidecar, or both --public-key and --timestamp", EXIT_MALFORMED)
        key = check_key(args.public_key)
        ts = parse(args.timestamp)
        compare = lambda got: split(got).public_key == key  # noqa: E731
    fh = _open_input(args.file)
    try:
        record = generate_stream(ts, fh)
    except OSError as exc:
        raise CliError(f"cannot read {args.file}: {exc.strerror}", EXIT_IO) from None
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()
    ok = compare(record.w3id)
    print("verified" if ok else "NOT verified")
    return EXIT_OK if ok else EXIT_REJECTED


def cmd_quad_gen(args) -> int:
    chain = generate_chain(ingest_bytes(_read_input(args.file)))
    text = chain.to_json() + "\n"
    if args.out:
        _write_output(args.out, text.encode("utf-8"))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_quad_verify(args) -> int:
    chain = QuadChain.from_json(_read_text(args.chain))
    report = validate_chain(chain, ingest_bytes(_read_input(args.file)), Policy(args.policy))
    if args.format == "json":
        print(json.dumps({
            "per_record_match": list(report.per_record_match),
            "causality_ok": report.causality_ok,
            "accepted": report.accepted,
            "policy": report.policy.value,
        }))
    else:
        for i, (record, ok) in enumerate(zip(chain.records, report.per_record_match), 1):
            print(f"record {i}  {record.timestamp.format()}  {'match' if ok else 'MISMATCH'}")
        print(f"matches   {sum(report.per_record_match)}/4")
        print(f"causality {'ok' if report.causality_ok else 'FAILED (timestamps not strictly increasing)'}")
        print(f"policy    {report.policy.value}")
        print(f"result    {'accepted' if report.accepted else 'REJECTED'}")
    return EXIT_OK if report.accepted else EXIT_REJECTED


def cmd_qr(args) -> int:
    if args.out:
        _write_qr(args.w3id, args.out, args.ec)
    else:
        sys.stdout.write(render_qr(args.w3id, args.ec).to_ascii())
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        config = ApiConfig.from_env(
            listen_address=args.listen, store_path=args.store, max_body_bytes=args.max_body
        )
    except ValueError as exc:
        raise CliError(f"bad configuration: {exc}", EXIT_MALFORMED) from None
    try:
        server = make_server(config)
    except StorageFailure as exc:
        raise CliError(f"cannot open store: {exc}", EXIT_STARTUP) from None
    except OSError as exc:
        raise CliError(f"cannot listen on {config.listen_address}: {exc.strerror or exc}",
                       EXIT_STARTUP) from None

    def _terminate(signum, frame):
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, _terminate)
    try:
        print(f"w3id serving on {server.url} (store {config.store_path})", file=sys.stderr, flush=True)
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        server.registry.close()
    return EXIT_OK


def _server_url(args) -> str:
    if args.server:
        return args.server.rstrip("/")
    if os.environ.get("W3ID_SERVER"):
        return os.environ["W3ID_SERVER"].rstrip("/")
    return "http://" + os.environ.get("W3ID_LISTEN", "127.0.0.1:8000")


def _request(req: urllib.request.Request) -> dict:
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return json.load(resp)
    except urllib.error.HTTPError as exc:
        try:
            body = json.load(exc)
            message = f"{body['error']}: {body['message']}"
        except (ValueError, KeyError, TypeError):
            message = f"HTTP {exc.code}"
        code = {400: EXIT_MALFORMED, 404: EXIT_REJECTED}.get(exc.code, EXIT_IO)
        raise CliError(message, code) from None
    except (urllib.error.URLError, OSError) as exc:
        raise CliError(f"cannot reach server: {getattr(exc, 'reason', exc)}", EXIT_IO) from None


def cmd_resolve(args) -> int:
    check_key(args.public_key)
    url = f"{_server_url(args)}/v1/ids/{quote(args.public_key)}"
    print(json.dumps(_request(urllib.request.Request(url)), indent=2))
    return EXIT_OK


def cmd_register(args) -> int:
    req = urllib.request.Request(
        f"{_server_url(args)}/v1/ids",
        data=_read_input(args.file),
        method="POST",
        headers={
            "Content-Type": "application/octet-stream",
            "X-Platform": args.platform,
            "X-Location-URI": args.location_uri,
        },
    )
    print(json.dumps(_request(req), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="w3id", description="Timestamped SHA-256 identifiers for digital objects.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen", help="generate a W3ID for a file ('-' for stdin)")
    s.add_argument("file", nargs="?", default="-")
    s.add_argument("--timestamp", help="20-digit UTC timestamp to use instead of the clock")
    s.add_argument("--qr", metavar="PATH", help="also write a QR code (PNG if PATH ends in .png)")
    s.add_argument("--ec", choices=EC_LEVELS, default="M", help="QR error-correction level")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("split", help="print the public and private halves of a W3ID")
    s.add_argument("w3id")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("verify", help="check a file against a public key or a sidecar record")
    s.add_argument("file")
    s.add_argument("--public-key")
    s.add_argument("--timestamp")
    s.add_argument("--sidecar", metavar="PATH", help="JSON record as written by 'gen --format json'")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("quad-gen", help="generate a chain of four W3IDs for a file")
    s.add_argument("file")
    s.add_argument("--out", metavar="PATH")
    s.set_defaults(func=cmd_quad_gen)

    s = sub.add_parser("quad-verify", help="validate a chain file against a file")
    s.add_argument("file")
    s.add_argument("chain")
    s.add_argument("--policy", choices=[p.value for p in Policy], default=Policy.ALL_FOUR.value)
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_quad_verify)

    s = sub.add_parser("qr", help="render a W3ID as a QR code")
    s.add_argument("w3id")
    s.add_argument("--out", metavar="PATH", help="PNG if PATH ends in .png, ASCII otherwise")
    s.add_argument("--ec", choices=EC_LEVELS, default="M")
    s.set_defaults(func=cmd_qr)

    s = sub.add_parser("serve", help="run the HTTP API")
    s.add_argument("--listen", help="host:port (env W3ID_LISTEN)")
    s.add_argument("--store", help="registry file (env W3ID_STORE)")
    s.add_argument("--max-body", type=int, help="request body limit in bytes (env W3ID_MAX_BODY)")
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("resolve", help="look up a public key on a running server")
    s.add_argument("public_key")
    s.add_argument("--server", help="base URL (env W3ID_SERVER)")
    s.set_defaults(func=cmd_resolve)

    s = sub.add_parser("register", help="upload a file to a running server and get its W3ID")
    s.add_argument("file")
    s.add_argument("--server", help="base URL (env W3ID_SERVER)")
    s.add_argument("--platform", default="")
    s.add_argument("--location-uri", default="")
    s.set_defaults(func=cmd_register)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"w3id: {exc}", file=sys.stderr)
        return exc.exit_code
    except (MalformedInput, ValueError) as exc:
        print(f"w3id: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except W3IDError as exc:
        print(f"w3id: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
