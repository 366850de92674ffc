"""Hourly load series ingestion, validation, and calendar slicing.

The canonical input is a two-column CSV (``timestamp,load_kw``) with one
row per hour.  A parsed :class:`LoadSeries` is gap-free by construction:
sample ``t`` is exactly ``t`` hours after ``start``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import Iterable, TextIO

import numpy as np

from .errors import DataError

HOURS_PER_DAY = 24
HOURS_PER_WEEK = 168
# Days 1-28 of any month contain each weekday exactly four times, which is
# what makes the 8-window bookkeeping work out.
DAYS_USED_PER_MONTH = 28

WEEKDAY_NAMES = (
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
)

_HOUR = timedelta(hours=1)


class LoadDataError(DataError):
    """Base for ingestion failures; carries the 1-based file row when known."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)


class EmptyInput(LoadDataError):
    pass


class BadHeader(LoadDataError):
    pass


class MalformedRow(LoadDataError):
    pass


class MalformedTimestamp(LoadDataError):
    pass


class NonMonotonicTimestamp(LoadDataError):
    pass


class NonNumericValue(LoadDataError):
    pass


class NegativeValue(LoadDataError):
    pass


class MonthNotCovered(DataError):
    pass


@dataclass(frozen=True)
class LoadSeries:
    """Validated hourly load samples anchored at a calendar timestamp.

    ``values[t]`` is the load in kW at ``start + t hours``.  Timestamps are
    naive local time; no DST adjustment is applied.
    """

    start: datetime
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def end(self) -> datetime:
        """Timestamp one hour past the last sample."""
        return self.start + _HOUR * len(self)

    def timestamp_at(self, t: int) -> datetime:
        return self.start + _HOUR * t

    def hour_index(self, when: datetime) -> int:
        """Offset of ``when`` from the series start, in whole hours."""
        delta = when - self.start
        hours, remainder = divmod(delta, _HOUR)
        if remainder:
            raise ValueError(f"{when} is not hour-aligned with the series start")
        return hours


@dataclass(frozen=True)
class MonthSlice:
    """Index ranges covering days 1-28 of one month in two coverage years.

    ``week_ranges`` holds 8 half-open ``(start, stop)`` hour ranges of length
    168 (four per year, chronological).  ``weekday_groups`` maps weekday
    (0=Monday .. 6=Sunday) to the 8 day ranges of length 24 on which that
    weekday falls.
    """

    month: int
    years: tuple[int, int]
    week_ranges: tuple[tuple[int, int], ...]
    weekday_groups: dict[int, tuple[tuple[int, int], ...]]


@dataclass(frozen=True)
class SeriesReport:
    """Summary statistics from :func:`validate_series`."""

    gaps: int
    negatives: int
    minimum: float
    maximum: float
    mean: float
    n: int


def parse_load_csv(source: str | Iterable[str] | TextIO, label: str = "") -> LoadSeries:
    """Parse canonical ``timestamp,load_kw`` CSV text into a LoadSeries.

    Raises an ingestion error naming the offending 1-based row on the first
    gap, non-numeric, negative, or malformed entry.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)

    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInput("input has no rows") from None
    header = [cell.strip().lstrip("﻿") for cell in header]
    if header != ["timestamp", "load_kw"]:
        raise BadHeader(f"expected header 'timestamp,load_kw', got {','.join(header)!r}", row=1)

    start: datetime | None = None
    previous: datetime | None = None
    values: list[float] = []
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue  # tolerate blank lines (e.g. trailing newline variants)
        if len(row) != 2:
            raise MalformedRow(f"expected 2 fields, got {len(row)}", row=row_no)

        try:
            ts = datetime.fromisoformat(row[0].strip())
        except ValueError:
            raise MalformedTimestamp(f"cannot parse timestamp {row[0]!r}", row=row_no) from None
        if ts.tzinfo is not None or ts.minute or ts.second or ts.microsecond:
            raise MalformedTimestamp(f"timestamp {row[0]!r} is not naive hour-resolution", row=row_no)
        if previous is not None and ts != previous + _HOUR:
            raise NonMonotonicTimestamp(f"expected {previous + _HOUR:%Y-%m-%dT%H:%M}, got {row[0]!r}", row=row_no)

        try:
            value = float(row[1])
        except ValueError:
            raise NonNumericValue(f"cannot parse load value {row[1]!r}", row=row_no) from None
        if not np.isfinite(value):
            raise NonNumericValue(f"load value {row[1]!r} is not finite", row=row_no)
        if value < 0:
            raise NegativeValue(f"load value {value} is negative", row=row_no)

        if start is None:
            start = ts
        previous = ts
        values.append(value)

    if start is None:
        raise EmptyInput("input has a header but no data rows")
    return LoadSeries(start=start, values=np.array(values), label=label)


def month_slice(series: LoadSeries, month: int) -> MonthSlice:
    """Locate days 1-28 of ``month`` in the first two years that cover them."""
    if not 1 <= month <= 12:
        raise ValueError(f"month must be 1-12, got {month}")

    span = DAYS_USED_PER_MONTH * HOURS_PER_DAY
    covered: list[tuple[int, int]] = []
    for year in range(series.start.year, series.end.year + 1):
        base = series.hour_index(datetime(year, month, 1))
        if base >= 0 and base + span <= len(series):
            covered.append((year, base))
    if len(covered) < 2:
        raise MonthNotCovered(
            f"series {series.label!r} does not cover days 1-{DAYS_USED_PER_MONTH} "
            f"of month {month} in two years"
        )
    covered = covered[:2]

    week_ranges = tuple(
        (base + HOURS_PER_WEEK * k, base + HOURS_PER_WEEK * (k + 1))
        for _, base in covered
        for k in range(4)
    )

    groups: dict[int, list[tuple[int, int]]] = {wd: [] for wd in range(7)}
    for year, base in covered:
        for day in range(DAYS_USED_PER_MONTH):
            weekday = date(year, month, day + 1).weekday()
            lo = base + HOURS_PER_DAY * day
            groups[weekday].append((lo, lo + HOURS_PER_DAY))

    return MonthSlice(
        month=month,
        years=(covered[0][0], covered[1][0]),
        week_ranges=week_ranges,
        weekday_groups={wd: tuple(ranges) for wd, ranges in groups.items()},
    )


def validate_series(series: LoadSeries) -> SeriesReport:
    """Summary statistics; a parsed series always reports zero anomalies."""
    values = series.values
    # Gaps cannot survive parsing (samples are positional), so the count is
    # structurally zero; it is reported for the record.
    return SeriesReport(
        gaps=0,
        negatives=int(np.count_nonzero(values < 0)),
        minimum=float(values.min()),
        maximum=float(values.max()),
        mean=float(values.mean()),
        n=len(series),
    )
