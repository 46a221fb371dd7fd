"""UTC timestamps in the 20-digit ``YYYYMMDDHHMMSSffffff`` wire form.

The formatted string is the only serialization of a timestamp; it is what
goes into hash preimages, sidecar files, store lines and JSON responses.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Callable

from .errors import ClockUnavailable, MalformedTimestamp, TimestampOverflow

TIMESTAMP_LENGTH = 20
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ONE_MICROSECOND = timedelta(microseconds=1)

# (name, slice, min, max); day upper bound is refined by the calendar check
_FIELDS = (
    ("year", slice(0, 4), 1, 9999),
    ("month", slice(4, 6), 1, 12),
    ("day", slice(6, 8), 1, 31),
    ("hour", slice(8, 10), 0, 23),
    ("minute", slice(10, 12), 0, 59),
    ("second", slice(12, 14), 0, 59),
    ("microsecond", slice(14, 20), 0, 999999),
)

Clock = Callable[[], datetime]


def system_clock() -> datetime:
    """Wall clock, truncated (never rounded) to whole microseconds."""
    return _EPOCH + timedelta(microseconds=time.time_ns() // 1000)


@dataclass(frozen=True, order=True)
class Timestamp:
    year: int
    month: int
    day: int
    hour: int = 0
    minute: int = 0
    second: int = 0
    microsecond: int = 0

    def __post_init__(self):
        for name, _, lo, hi in _FIELDS:
            value = getattr(self, name)
            if not isinstance(value, int) or not lo <= value <= hi:
                raise MalformedTimestamp(f"{name}={value!r} out of range", "OUT_OF_RANGE")
        try:
            self.to_datetime()
        except ValueError as exc:
            raise MalformedTimestamp(str(exc), "INVALID_DATE") from None

    def format(self) -> str:
        return (
            f"{self.year:04d}{self.month:02d}{self.day:02d}"
            f"{self.hour:02d}{self.minute:02d}{self.second:02d}{self.microsecond:06d}"
        )

    __str__ = format

    def to_bytes(self) -> bytes:
        return self.format().encode("ascii")

    def to_datetime(self) -> datetime:
        return datetime(
            self.year, self.month, self.day, self.hour, self.minute,
            self.second, self.microsecond, tzinfo=timezone.utc,
        )

    @classmethod
    def from_datetime(cls, dt: datetime) -> Timestamp:
        """Naive datetimes are taken to already be UTC."""
        if dt.tzinfo is not None:
            dt = dt.astimezone(timezone.utc)
        return cls(dt.year, dt.month, dt.day, dt.hour, dt.minute, dt.second, dt.microsecond)

    def plus_microseconds(self, n: int) -> Timestamp:
        try:
            return Timestamp.from_datetime(self.to_datetime() + n * _ONE_MICROSECOND)
        except (OverflowError, MalformedTimestamp):
            raise TimestampOverflow(f"{self.format()} + {n}us is not representable") from None


def format(ts: Timestamp) -> str:
    return ts.format()


def parse(s: str) -> Timestamp:
    if not isinstance(s, str):
        raise MalformedTimestamp(f"expected str, got {type(s).__name__}", "NON_DIGIT")
    if len(s) != TIMESTAMP_LENGTH:
        raise MalformedTimestamp(f"expected {TIMESTAMP_LENGTH} digits, got {len(s)}", "WRONG_LENGTH")
    # str.isdigit accepts non-ASCII digits such as '²'
    if not (s.isascii() and s.isdigit()):
        raise MalformedTimestamp(f"non-digit in {s!r}", "NON_DIGIT")
    values = {}
    for name, sl, lo, hi in _FIELDS:
        v = int(s[sl])
        if not lo <= v <= hi:
            raise MalformedTimestamp(f"{name}={v} out of range [{lo}, {hi}]", "OUT_OF_RANGE")
        values[name] = v
    return Timestamp(**values)


def now_utc(clock: Clock = system_clock) -> Timestamp:
    try:
        dt = clock()
    except Exception as exc:
        raise ClockUnavailable(f"clock read failed: {exc}") from exc
    if not isinstance(dt, datetime):
        raise ClockUnavailable(f"clock returned {type(dt).__name__}, not datetime")
    return Timestamp.from_datetime(dt)


class MonotonicIssuer:
    """Hands out strictly increasing timestamps within one process.

    If the wall clock has not advanced past the last issued value (same
    microsecond, or the clock stepped backwards) the previous value plus
    one microsecond is issued instead.
    """

    def __init__(self, clock: Clock = system_clock):
        self.clock = clock
        self._last: Timestamp | None = None
        self._lock = threading.Lock()

    @property
    def last(self) -> Timestamp | None:
        return self._last

    def observe(self, ts: Timestamp) -> None:
        """Make later issues strictly greater than ``ts``."""
        with self._lock:
            if self._last is None or ts > self._last:
                self._last = ts

    def next(self) -> Timestamp:
        with self._lock:
            ts = now_utc(self.clock)
            if self._last is not None and ts <= self._last:
                ts = self._last.plus_microseconds(1)
            self._last = ts
            return ts


def next_monotonic(issuer: MonotonicIssuer) -> Timestamp:
    return issuer.next()


_default_issuer: MonotonicIssuer | None = None
_default_lock = threading.Lock()


def default_issuer() -> MonotonicIssuer:
    """The process-wide issuer backed by the system clock."""
    global _default_issuer
    with _default_lock:
        if _default_issuer is None:
            _default_issuer = MonotonicIssuer()
        return _default_issuer
