"""Calendar-month arithmetic on "YYYY-MM" strings.

Months are handled as consecutive integer indices (year * 12 + month - 1) so
that panel contiguity and lead/lag shifts are plain integer arithmetic.
Plain integers pass through unchanged, which lets synthetic panels use
abstract period numbers.
"""

from __future__ import annotations

import re

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


def month_index(month: str | int) -> int:
    """Convert "YYYY-MM" (or an already-integer period) to a month index."""
    if isinstance(month, int):
        return month
    m = _MONTH_RE.match(str(month))
    if not m:
        raise ValueError(f"invalid month {month!r}: expected YYYY-MM")
    year, mon = int(m.group(1)), int(m.group(2))
    if not 1 <= mon <= 12:
        raise ValueError(f"invalid month {month!r}: month part out of range")
    return year * 12 + (mon - 1)


def month_label(index: int) -> str:
    """Inverse of :func:`month_index` for calendar indices."""
    year, mon = divmod(index, 12)
    return f"{year:04d}-{mon + 1:02d}"


def month_year(month: str | int) -> int:
    """Calendar year of a month (index // 12 for integer periods)."""
    return month_index(month) // 12


def month_range(start: str | int, end: str | int) -> list[str]:
    """Inclusive list of "YYYY-MM" labels; empty when start is after end."""
    lo, hi = month_index(start), month_index(end)
    return [month_label(i) for i in range(lo, hi + 1)]
