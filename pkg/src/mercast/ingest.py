"""Monthly Energy Review CSV ingestion.

The expected shape is the EIA bulk CSV: a header row with at least MSN,
YYYYMM and Value columns, one row per series-month, month 13 rows holding
annual aggregates. Values are either decimal numbers or one of the
not-available markers {"Not Available", "NA", ""} (case-insensitive);
anything else is treated as format drift and rejected loudly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, TextIO

import numpy as np

from .core import MonthStamp, TimeSeries
from .exceptions import (
    DataError,
    DiscontinuityError,
    MerParseError,
    SeriesNotFoundError,
)

__all__ = ["CatalogEntry", "load_mer_csv", "list_series", "NA_MARKERS"]

NA_MARKERS = frozenset({"not available", "na", ""})

REQUIRED_COLUMNS = ("MSN", "YYYYMM", "Value")


@dataclass(frozen=True)
class CatalogEntry:
    msn: str
    description: str
    unit: str
    first: MonthStamp
    last: MonthStamp
    n_months: int


def _as_text_lines(source: str | Path | bytes | TextIO | BinaryIO) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            yield from handle
        return
    if isinstance(source, bytes):
        yield from io.StringIO(source.decode("utf-8"))
        return
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    yield from io.StringIO(data)


@dataclass(frozen=True)
class _Row:
    msn: str
    year: int
    month: int
    value: float | None
    description: str
    unit: str
    line: int


def _parse_rows(source) -> Iterator[_Row]:
    reader = csv.DictReader(_as_text_lines(source))
    if reader.fieldnames is None:
        raise MerParseError("empty input: no header row")
    missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise MerParseError(f"header is missing required columns: {', '.join(missing)}")
    for record in reader:
        line = reader.line_num
        raw_stamp = (record["YYYYMM"] or "").strip()
        try:
            stamp = int(raw_stamp)
        except ValueError:
            raise MerParseError(f"row {line}: YYYYMM {raw_stamp!r} is not an integer")
        year, month = divmod(stamp, 100)
        if not 1 <= month <= 13:
            raise MerParseError(f"row {line}: month {month} outside 1..13")
        raw_value = (record["Value"] or "").strip()
        if raw_value.lower() in NA_MARKERS:
            value = None
        else:
            try:
                value = float(raw_value)
            except ValueError:
                raise MerParseError(f"row {line}: unparseable value {raw_value!r}")
        yield _Row(
            msn=(record["MSN"] or "").strip(),
            year=year,
            month=month,
            value=value,
            description=(record.get("Description") or "").strip(),
            unit=(record.get("Unit") or "").strip(),
            line=line,
        )


def load_mer_csv(
    source: str | Path | bytes | TextIO | BinaryIO,
    msn: str,
    span: tuple[MonthStamp | None, MonthStamp | None] | None = None,
) -> TimeSeries:
    """Extract one monthly series by MSN code as a contiguous TimeSeries.

    Annual (month 13) rows are dropped, the remainder is sorted by stamp,
    and any month missing inside the selected window, including one whose
    value was marked not available, raises a discontinuity error.
    """
    lo, hi = span if span is not None else (None, None)
    seen: set[str] = set()
    picked: list[_Row] = []
    for row in _parse_rows(source):
        seen.add(row.msn)
        if row.msn != msn or row.month == 13:
            continue
        stamp = MonthStamp(row.year, row.month)
        if (lo is not None and stamp < lo) or (hi is not None and stamp > hi):
            continue
        picked.append(row)
    if not picked:
        if msn not in seen:
            raise SeriesNotFoundError(
                f"MSN {msn!r} not present; available: {', '.join(sorted(seen)) or '(none)'}"
            )
        raise DataError(f"MSN {msn!r} has no monthly rows in the requested range")

    picked.sort(key=lambda r: (r.year, r.month))
    months = [MonthStamp(r.year, r.month) for r in picked]
    for prev, cur, row in zip(months, months[1:], picked[1:]):
        if cur == prev:
            raise DiscontinuityError(f"duplicate month {cur.isoformat()} for MSN {msn!r}")

    present = [(m, r) for m, r in zip(months, picked) if r.value is not None]
    if not present:
        raise DataError(f"MSN {msn!r} has no available values in the requested range")
    for (prev, _), (cur, _) in zip(present, present[1:]):
        if cur.months_since(prev) != 1:
            raise DiscontinuityError(
                f"gap in MSN {msn!r}: {prev.isoformat()} is followed by {cur.isoformat()}"
            )
    values = np.array([r.value for _, r in present], dtype=float)
    unit = next((r.unit for _, r in present if r.unit), "")
    return TimeSeries(present[0][0], values, period=12, unit=unit, name=msn)


def list_series(source: str | Path | bytes | TextIO | BinaryIO) -> list[CatalogEntry]:
    """One catalog row per MSN with its monthly span; annual rows ignored."""
    spans: dict[str, list] = {}
    for row in _parse_rows(source):
        if row.month == 13:
            continue
        stamp = MonthStamp(row.year, row.month)
        entry = spans.get(row.msn)
        if entry is None:
            spans[row.msn] = [row.description, row.unit, stamp, stamp, 1 if row.value is not None else 0]
        else:
            entry[2] = min(entry[2], stamp)
            entry[3] = max(entry[3], stamp)
            if row.value is not None:
                entry[4] += 1
            if not entry[0] and row.description:
                entry[0] = row.description
            if not entry[1] and row.unit:
                entry[1] = row.unit
    return [
        CatalogEntry(msn, desc, unit, first, last, count)
        for msn, (desc, unit, first, last, count) in sorted(spans.items())
    ]
