"""Line-oriented ``metric = value unit`` files.

Shared by synthetic model configs and datasheet claims.  ``n/a`` marks a
value the document does not provide.  ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ClaimsParseError


@dataclass(frozen=True)
class KvEntry:
    key: str
    value: float | None
    unit: str | None
    line_no: int


def parse_kv(text: str) -> dict[str, KvEntry]:
    """Parse key-value text; raises ClaimsParseError with the offending line."""
    entries: dict[str, KvEntry] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ClaimsParseError(f"expected 'key = value', got {raw!r}", line_no)
        key, rhs = (part.strip() for part in line.split("=", 1))
        if not key or not rhs:
            raise ClaimsParseError(f"empty key or value in {raw!r}", line_no)
        parts = rhs.split()
        if parts[0].lower() in ("n/a", "na"):
            value: float | None = None
            unit = " ".join(parts[1:]) or None
        else:
            try:
                value = float(parts[0])
            except ValueError:
                raise ClaimsParseError(
                    f"cannot parse value {parts[0]!r}", line_no
                ) from None
            unit = " ".join(parts[1:]) or None
        if key in entries:
            raise ClaimsParseError(f"duplicate key {key!r}", line_no)
        entries[key] = KvEntry(key=key, value=value, unit=unit, line_no=line_no)
    return entries


def parse_kv_file(path: str | Path) -> dict[str, KvEntry]:
    return parse_kv(Path(path).read_text())
