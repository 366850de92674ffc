"""Accuracy metrics and windowed minimum-MAPE curve selection.

Estimate series use NaN as the missing marker.  Metrics score only the
positions where both series are present; MAPE additionally skips samples
whose actual value is zero (division guard; such samples are counted in
the report).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import DataError
from .ingest import HOURS_PER_DAY, HOURS_PER_WEEK, WEEKDAY_NAMES, MonthSlice

CURVE_CSV_HEADER = "hour_of_window,estimate_kw"
SCORES_CSV_HEADER = "window,year,week,mape"
WINDOWS_PER_MONTH = 8


class MetricError(DataError):
    pass


class NoComparablePositions(MetricError):
    pass


class AllWindowsMissing(DataError):
    pass


@dataclass(frozen=True)
class EvalReport:
    """Overall accuracy of an estimate series against its comparison data."""

    mape: float
    rmse: float
    n: int
    n_zero_skipped: int = 0


@dataclass(frozen=True)
class WindowScore:
    index: int
    year_week_label: str
    mape: float | None  # None: window had no comparable samples


@dataclass(frozen=True)
class RlcSelection:
    """The chosen window of the estimate series plus all window scores."""

    kind: str  # "weekly" or "daily"
    weekday: int | None
    month: int
    scores: tuple[WindowScore, ...]
    selected: int
    curve: np.ndarray

    def __post_init__(self):
        curve = np.asarray(self.curve, dtype=np.float64)
        curve.flags.writeable = False
        object.__setattr__(self, "curve", curve)
        expected = HOURS_PER_DAY if self.kind == "daily" else HOURS_PER_WEEK
        if curve.shape != (expected,):
            raise ValueError(f"{self.kind} curve must have {expected} samples")

    @property
    def selected_score(self) -> WindowScore:
        return self.scores[self.selected]


def _aligned(actual, estimate) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64)
    e = np.asarray(estimate, dtype=np.float64)
    if a.shape != e.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {e.shape}")
    return a, e


def mape(actual, estimate) -> float:
    """Mean absolute percent error over comparable, positive-actual samples."""
    a, e = _aligned(actual, estimate)
    mask = np.isfinite(a) & np.isfinite(e) & (a > 0)
    if not mask.any():
        raise NoComparablePositions("no position has a present estimate and positive actual")
    return 100.0 * float(np.mean(np.abs(a[mask] - e[mask]) / a[mask]))


def rmse(actual, estimate) -> float:
    """Root mean square error over positions where both series are present."""
    a, e = _aligned(actual, estimate)
    mask = np.isfinite(a) & np.isfinite(e)
    if not mask.any():
        raise NoComparablePositions("no position has both series present")
    d = a[mask] - e[mask]
    return float(np.sqrt(np.mean(d * d)))


def evaluate(actual, estimate) -> EvalReport:
    """MAPE and RMSE of an estimate series, with comparison counts."""
    a, e = _aligned(actual, estimate)
    present = np.isfinite(a) & np.isfinite(e)
    zero_skipped = int(np.count_nonzero(present & (a <= 0)))
    return EvalReport(
        mape=mape(a, e),
        rmse=rmse(a, e),
        n=int(np.count_nonzero(present)),
        n_zero_skipped=zero_skipped,
    )


def _score_windows(
    actual: np.ndarray,
    estimate: np.ndarray,
    ranges,
    years: tuple[int, int],
) -> list[WindowScore]:
    per_year = len(ranges) // 2
    scores = []
    for k, (lo, hi) in enumerate(ranges):
        year = years[0] if k < per_year else years[1]
        label = f"{year}-w{k % per_year + 1}"
        try:
            value = mape(actual[lo:hi], estimate[lo:hi])
        except NoComparablePositions:
            value = None
        scores.append(WindowScore(index=k, year_week_label=label, mape=value))
    return scores


def _argmin_score(scores: list[WindowScore]) -> int:
    best: int | None = None
    for score in scores:
        if score.mape is None:
            continue
        if best is None or score.mape < scores[best].mape:
            best = score.index
    if best is None:
        raise AllWindowsMissing("every window is fully masked")
    return best


def select_weekly_rlc(actual, estimate, mslice: MonthSlice) -> RlcSelection:
    """Pick the 168-hour window with the least MAPE among the month's 8 weeks.

    ``actual`` is the comparison data the estimate chases (the target
    vector); windows whose estimate is fully masked are excluded.  Ties go
    to the lowest index.
    """
    a, e = _aligned(actual, estimate)
    _check_coverage(a, mslice.week_ranges)
    scores = _score_windows(a, e, mslice.week_ranges, mslice.years)
    selected = _argmin_score(scores)
    lo, hi = mslice.week_ranges[selected]
    return RlcSelection(
        kind="weekly",
        weekday=None,
        month=mslice.month,
        scores=tuple(scores),
        selected=selected,
        curve=e[lo:hi].copy(),
    )


def select_daily_rlc(actual, estimate, mslice: MonthSlice, weekday: int) -> RlcSelection:
    """As weekly selection, over the 8 day windows of one weekday (0=Monday)."""
    if weekday not in mslice.weekday_groups:
        raise ValueError(f"weekday must be 0-6, got {weekday}")
    a, e = _aligned(actual, estimate)
    ranges = mslice.weekday_groups[weekday]
    _check_coverage(a, ranges)
    scores = _score_windows(a, e, ranges, mslice.years)
    selected = _argmin_score(scores)
    lo, hi = ranges[selected]
    return RlcSelection(
        kind="daily",
        weekday=weekday,
        month=mslice.month,
        scores=tuple(scores),
        selected=selected,
        curve=e[lo:hi].copy(),
    )


def _check_coverage(arr: np.ndarray, ranges) -> None:
    top = max(hi for _, hi in ranges)
    if arr.shape[0] < top:
        raise ValueError(f"series of length {arr.shape[0]} does not cover window end {top}")


# ---------------------------------------------------------------------------
# Exports


def write_curve_csv(selection: RlcSelection, out: TextIO) -> None:
    out.write(CURVE_CSV_HEADER + "\n")
    for hour, value in enumerate(selection.curve):
        token = "NaN" if np.isnan(value) else repr(float(value))
        out.write(f"{hour},{token}\n")


def read_curve_csv(source: TextIO) -> np.ndarray:
    header = source.readline().strip()
    if header != CURVE_CSV_HEADER:
        raise ValueError(f"unexpected curve header {header!r}")
    return np.array([float(line.split(",")[1]) for line in source if line.strip()])


def write_scores_csv(selection: RlcSelection, out: TextIO) -> None:
    """Table of per-window MAPE, 4 decimals, in the Table-2 style."""
    out.write(SCORES_CSV_HEADER + "\n")
    for score in selection.scores:
        year, week = score.year_week_label.split("-w")
        value = "NaN" if score.mape is None else f"{score.mape:.4f}"
        out.write(f"{score.index + 1},{year},{week},{value}\n")


def read_scores_csv(source: TextIO) -> list[tuple[int, int, int, float | None]]:
    header = source.readline().strip()
    if header != SCORES_CSV_HEADER:
        raise ValueError(f"unexpected scores header {header!r}")
    rows = []
    for line in source:
        if not line.strip():
            continue
        window, year, week, value = line.strip().split(",")
        rows.append(
            (int(window), int(year), int(week), None if value == "NaN" else float(value))
        )
    return rows


def selection_report(selection: RlcSelection, overall: EvalReport) -> dict:
    """Sidecar report data for one selection."""
    doc = {
        "kind": selection.kind,
        "month": selection.month,
        "scores": [
            {
                "index": s.index,
                "label": s.year_week_label,
                "mape": None if s.mape is None else round(s.mape, 4),
            }
            for s in selection.scores
        ],
        "selected_index": selection.selected,
        "selected_label": selection.selected_score.year_week_label,
        "selected_mape": round(selection.selected_score.mape, 4),
        "overall": {
            "mape": round(overall.mape, 4),
            "rmse": round(overall.rmse, 4),
            "n": overall.n,
            "n_zero_skipped": overall.n_zero_skipped,
        },
    }
    if selection.kind == "daily":
        doc["weekday"] = WEEKDAY_NAMES[selection.weekday]
    return doc


def write_selection_report(selection: RlcSelection, overall: EvalReport, out: TextIO) -> None:
    json.dump(selection_report(selection, overall), out, indent=2)
    out.write("\n")
