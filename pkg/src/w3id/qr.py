"""QR rendering of a W3ID (encoding is delegated to segno)."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import segno

from .ids import check_w3id

EC_LEVELS = ("L", "M", "Q", "H")
QUIET_ZONE = 4


@dataclass(frozen=True)
class QrSymbol:
    modules: tuple[tuple[bool, ...], ...]
    ec_level: str
    text: str = field(repr=False)
    version: int = 0

    @property
    def size(self) -> int:
        return len(self.modules)

    def to_ascii(self, border: int = QUIET_ZONE) -> str:
        """Dark modules as two full blocks so the symbol stays square in a terminal."""
        blank = "  " * (self.size + 2 * border)
        pad = "  " * border
        rows = [blank] * border
        rows += [pad + "".join("██" if dark else "  " for dark in row) + pad for row in self.modules]
        rows += [blank] * border
        return "\n".join(rows) + "\n"

    def to_png(self, scale: int = 8, border: int = QUIET_ZONE) -> bytes:
        buf = io.BytesIO()
        _encode(self.text, self.ec_level, self.version).save(buf, kind="png", scale=scale, border=border)
        return buf.getvalue()


def _encode(text: str, ec_level: str, version: int | None = None):
    return segno.make_qr(text, error=ec_level.lower(), version=version, boost_error=False)


def render_qr(text: str, ec_level: str = "M") -> QrSymbol:
    """Encode a W3ID as a QR symbol.

    Uses the smallest version that fits at the requested error-correction
    level. Mask selection is deterministic, so equal inputs give identical
    symbols.
    """
    check_w3id(text)
    ec = ec_level.upper()
    if ec not in EC_LEVELS:
        raise ValueError(f"ec_level must be one of {EC_LEVELS}, got {ec_level!r}")
    qr = _encode(text, ec)
    modules = tuple(tuple(bool(m) for m in row) for row in qr.matrix)
    return QrSymbol(modules, ec, text, qr.version)
