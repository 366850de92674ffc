"""Feature construction: model factors, lag inputs, validity mask, split.

Every hour ``t`` of a series yields one row with inputs
``(factor, Y(t-168), Y(t-24), Y(t))`` and target ``Y(t+24)``.  Rows whose
lags underflow the start or whose target overflows the end are masked
invalid; unavailable fields hold NaN.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import DataError
from .ingest import HOURS_PER_DAY, HOURS_PER_WEEK, LoadSeries

LAG_WEEK = HOURS_PER_WEEK
LAG_DAY = HOURS_PER_DAY
HORIZON = HOURS_PER_DAY
N_INPUTS = 4

DATASET_CSV_HEADER = "t,factor,y_lag168,y_lag24,y_now,target,valid"


class FeatureError(DataError):
    pass


class AllZeroSpan(FeatureError):
    def __init__(self, span_start: int):
        self.span_start = span_start
        super().__init__(f"factor span starting at hour {span_start} is all zero")


class DegenerateSpan(FeatureError):
    def __init__(self):
        super().__init__("factor span is empty")


class TooFewRows(FeatureError):
    pass


class FactorKind(enum.Enum):
    """Which model factor feeds input 0: weekly/daily span, system/nodal data."""

    WEEKLY_SYSTEM = "weekly-system"
    DAILY_SYSTEM = "daily-system"
    WEEKLY_NODAL = "weekly-nodal"
    DAILY_NODAL = "daily-nodal"

    @property
    def span_hours(self) -> int:
        return HOURS_PER_WEEK if self.is_weekly else HOURS_PER_DAY

    @property
    def is_weekly(self) -> bool:
        return self in (FactorKind.WEEKLY_SYSTEM, FactorKind.WEEKLY_NODAL)

    @property
    def is_nodal(self) -> bool:
        return self in (FactorKind.WEEKLY_NODAL, FactorKind.DAILY_NODAL)

    @classmethod
    def from_string(cls, text: str) -> "FactorKind":
        for kind in cls:
            if kind.value == text:
                return kind
        raise ValueError(f"unknown factor kind {text!r}; expected one of "
                         f"{', '.join(k.value for k in cls)}")


@dataclass(frozen=True)
class FeatureRow:
    factor: float
    y_lag168: float
    y_lag24: float
    y_now: float
    target: float
    valid: bool


@dataclass(frozen=True)
class Dataset:
    """Columnar feature rows, one per hour of the source series."""

    factor: np.ndarray
    lag168: np.ndarray
    lag24: np.ndarray
    now: np.ndarray
    target: np.ndarray
    valid: np.ndarray
    source_label: str
    factor_kind: FactorKind

    def __post_init__(self):
        for name in ("factor", "lag168", "lag24", "now", "target", "valid"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.factor.shape[0]

    def row(self, t: int) -> FeatureRow:
        return FeatureRow(
            factor=float(self.factor[t]),
            y_lag168=float(self.lag168[t]),
            y_lag24=float(self.lag24[t]),
            y_now=float(self.now[t]),
            target=float(self.target[t]),
            valid=bool(self.valid[t]),
        )

    def valid_indices(self) -> np.ndarray:
        return np.flatnonzero(self.valid)

    def inputs_at(self, indices: np.ndarray) -> np.ndarray:
        """(N, 4) input matrix in the order (factor, lag168, lag24, now)."""
        return np.column_stack(
            [self.factor[indices], self.lag168[indices], self.lag24[indices], self.now[indices]]
        )


@dataclass(frozen=True)
class DatasetView:
    """Chronological subset of a dataset's valid rows."""

    dataset: Dataset
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.indices.shape[0]

    def inputs(self) -> np.ndarray:
        return self.dataset.inputs_at(self.indices)

    def targets(self) -> np.ndarray:
        return self.dataset.target[self.indices]


def model_factor(span_values) -> float:
    """Average load of a span divided by its maximum load; in (0, 1].

    The float mean of a constant span can land one ulp off the max, so the
    constant case is answered exactly and the ratio is clamped at 1.
    """
    values = np.asarray(span_values, dtype=np.float64)
    if values.size == 0:
        raise DegenerateSpan()
    peak = float(values.max())
    if peak == 0.0:
        raise AllZeroSpan(span_start=0)
    if float(values.min()) == peak:
        return 1.0
    return min(1.0, float(values.mean()) / peak)


def build_dataset(series: LoadSeries, kind: FactorKind) -> Dataset:
    """Assemble the 4-input/1-target rows for every hour of ``series``.

    Factor spans are consecutive fixed-width blocks from the series start
    (168 h weekly, 24 h daily); a trailing partial block uses its actual
    length.
    """
    values = series.values
    n = len(series)
    span = kind.span_hours

    factor = np.empty(n, dtype=np.float64)
    for lo in range(0, n, span):
        hi = min(lo + span, n)
        segment = values[lo:hi]
        if float(segment.max()) == 0.0:
            raise AllZeroSpan(span_start=lo)
        factor[lo:hi] = model_factor(segment)

    lag168 = np.full(n, np.nan)
    lag168[LAG_WEEK:] = values[: max(0, n - LAG_WEEK)]
    lag24 = np.full(n, np.nan)
    lag24[LAG_DAY:] = values[: max(0, n - LAG_DAY)]
    target = np.full(n, np.nan)
    target[: max(0, n - HORIZON)] = values[HORIZON:]

    valid = np.zeros(n, dtype=bool)
    valid[LAG_WEEK: n - HORIZON] = True

    return Dataset(
        factor=factor,
        lag168=lag168,
        lag24=lag24,
        now=values.copy(),
        target=target,
        valid=valid,
        source_label=series.label,
        factor_kind=kind,
    )


def split_train_check(dataset: Dataset) -> tuple[DatasetView, DatasetView]:
    """50/50 chronological split of the valid rows; train takes the floor half."""
    valid = dataset.valid_indices()
    if valid.size < 2:
        raise TooFewRows(f"need at least 2 valid rows to split, have {valid.size}")
    cut = valid.size // 2
    return DatasetView(dataset, valid[:cut]), DatasetView(dataset, valid[cut:])


def write_dataset_csv(dataset: Dataset, out: TextIO) -> None:
    """Inspection export; NaN fields use the literal token ``NaN``."""
    out.write(DATASET_CSV_HEADER + "\n")
    for t in range(len(dataset)):
        fields = [
            str(t),
            _fmt(dataset.factor[t]),
            _fmt(dataset.lag168[t]),
            _fmt(dataset.lag24[t]),
            _fmt(dataset.now[t]),
            _fmt(dataset.target[t]),
            "1" if dataset.valid[t] else "0",
        ]
        out.write(",".join(fields) + "\n")


def read_dataset_csv(source: TextIO) -> list[FeatureRow]:
    header = source.readline().strip()
    if header != DATASET_CSV_HEADER:
        raise ValueError(f"unexpected dataset header {header!r}")
    rows = []
    for line in source:
        if not line.strip():
            continue
        _, factor, lag168, lag24, now, target, valid = line.strip().split(",")
        rows.append(
            FeatureRow(
                factor=float(factor),
                y_lag168=float(lag168),
                y_lag24=float(lag24),
                y_now=float(now),
                target=float(target),
                valid=valid == "1",
            )
        )
    return rows


def _fmt(x: float) -> str:
    return "NaN" if np.isnan(x) else repr(float(x))
