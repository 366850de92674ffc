"""Command-line front end: convert, validate, train, estimate, select.

Exit codes are a stable contract: 0 success, 2 data error, 3 config error,
4 selection infeasible.  Identical inputs always produce byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import TextIO

import numpy as np

from .anfis import (
    AnfisModel,
    Batch,
    TrainConfig,
    TrainHistory,
    init_grid,
    load_model,
    predict_series,
    save_model,
    train,
)
from .errors import DataError
from .features import FactorKind, build_dataset, split_train_check
from .ingest import WEEKDAY_NAMES, LoadSeries, parse_load_csv, month_slice, validate_series
from .rlc import (
    AllWindowsMissing,
    EvalReport,
    RlcSelection,
    evaluate,
    select_daily_rlc,
    select_weekly_rlc,
    write_curve_csv,
    write_scores_csv,
    write_selection_report,
)

ESTIMATE_CSV_HEADER = "t,actual_kw,estimate_kw,error_kw"
HISTORY_CSV_HEADER = "epoch,train_rmse,check_rmse,step"
WIDE_HEADER = ["date"] + [f"h{h}" for h in range(1, 25)]


class ConfigError(Exception):
    """Bad configuration or flags (CLI exit code 3)."""


class MalformedWideRow(DataError):
    def __init__(self, message: str, row: int):
        self.row = row
        super().__init__(f"{message} (row {row})")


@dataclass
class RunConfig:
    input_path: str | None = None
    source: str = "system"
    factor_kind: str = "weekly-system"
    month: int | None = None
    mfs_per_input: int = 2
    epochs: int = 100
    initial_step: float | None = None
    tolerance: float = 0.0
    output_dir: str = "out"


_CONFIG_KEYS = set(RunConfig.__dataclass_fields__)


# ---------------------------------------------------------------------------
# Wide-format conversion


def convert_wide_csv(source: str | TextIO) -> str:
    """Expand ``date,h1..h24`` rows into canonical ``timestamp,load_kw`` text."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = [cell.strip().lstrip("﻿") for cell in next(reader)]
    except StopIteration:
        raise MalformedWideRow("input has no rows", row=1) from None
    if header != WIDE_HEADER:
        raise MalformedWideRow("expected header 'date,h1,...,h24'", row=1)

    days: list[tuple[date, list[float]]] = []
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 25:
            raise MalformedWideRow(f"expected 25 fields, got {len(row)}", row=row_no)
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError:
            raise MalformedWideRow(f"cannot parse date {row[0]!r}", row=row_no) from None
        try:
            values = [float(cell) for cell in row[1:]]
        except ValueError:
            raise MalformedWideRow("non-numeric hourly value", row=row_no) from None
        if not all(np.isfinite(values)):
            raise MalformedWideRow("non-finite hourly value", row=row_no)
        days.append((day, values))

    days.sort(key=lambda item: item[0])
    lines = ["timestamp,load_kw"]
    for day, values in days:
        for hour, value in enumerate(values):
            lines.append(f"{day.isoformat()}T{hour:02d}:00,{value!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Delimited writers/readers


def _token(x: float) -> str:
    return "NaN" if np.isnan(x) else repr(float(x))


def write_estimate_csv(actual: np.ndarray, estimate: np.ndarray, out: TextIO) -> None:
    error = actual - estimate
    out.write(ESTIMATE_CSV_HEADER + "\n")
    for t in range(len(actual)):
        out.write(f"{t},{_token(actual[t])},{_token(estimate[t])},{_token(error[t])}\n")


def read_estimate_csv(source: TextIO) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    header = source.readline().strip()
    if header != ESTIMATE_CSV_HEADER:
        raise ValueError(f"unexpected estimate header {header!r}")
    rows = [line.strip().split(",") for line in source if line.strip()]
    actual = np.array([float(r[1]) for r in rows])
    estimate = np.array([float(r[2]) for r in rows])
    error = np.array([float(r[3]) for r in rows])
    return actual, estimate, error


def write_history_csv(history: TrainHistory, out: TextIO) -> None:
    out.write(HISTORY_CSV_HEADER + "\n")
    for epoch, record in enumerate(history.records, start=1):
        out.write(
            f"{epoch},{record.train_rmse!r},{record.check_rmse!r},{record.step!r}\n"
        )


def read_history_csv(source: TextIO) -> list[tuple[int, float, float, float]]:
    header = source.readline().strip()
    if header != HISTORY_CSV_HEADER:
        raise ValueError(f"unexpected history header {header!r}")
    rows = []
    for line in source:
        if not line.strip():
            continue
        epoch, train_rmse, check_rmse, step = line.strip().split(",")
        rows.append((int(epoch), float(train_rmse), float(check_rmse), float(step)))
    return rows


# ---------------------------------------------------------------------------
# Config resolution


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    unknown = sorted(set(doc) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return doc


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _as_number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def resolve_config(args: argparse.Namespace, selection_kind: str | None = None) -> RunConfig:
    """Merge defaults, config file, and flags (flags win); validate."""
    doc = _load_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(flag_name: str, key: str, default):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return flag
        return doc.get(key, default)

    cfg = RunConfig(
        input_path=pick("input", "input_path", None),
        source=str(pick("source", "source", "system")),
        month=pick("month", "month", None),
        mfs_per_input=pick("mfs", "mfs_per_input", 2),
        epochs=pick("epochs", "epochs", 100),
        initial_step=pick("initial_step", "initial_step", None),
        tolerance=pick("tolerance", "tolerance", 0.0),
        output_dir=str(pick("out", "output_dir", "out")),
        factor_kind="",
    )

    if not (cfg.source == "system" or cfg.source == "node" or cfg.source.startswith("node:")):
        raise ConfigError(f"source must be 'system' or 'node:<id>', got {cfg.source!r}")

    explicit_kind = pick("factor_kind", "factor_kind", None)
    if explicit_kind is None:
        span = selection_kind or "weekly"
        realm = "nodal" if cfg.source.startswith("node") else "system"
        cfg.factor_kind = f"{span}-{realm}"
    else:
        cfg.factor_kind = str(explicit_kind)
    try:
        FactorKind.from_string(cfg.factor_kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if cfg.month is not None:
        cfg.month = _as_int(cfg.month, "month")
        if not 1 <= cfg.month <= 12:
            raise ConfigError(f"month must be 1-12, got {cfg.month}")
    cfg.mfs_per_input = _as_int(cfg.mfs_per_input, "mfs_per_input")
    if cfg.mfs_per_input not in (2, 3):
        raise ConfigError(f"mfs_per_input must be 2 or 3, got {cfg.mfs_per_input}")
    cfg.epochs = _as_int(cfg.epochs, "epochs")
    if cfg.epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {cfg.epochs}")
    if cfg.initial_step is not None:
        cfg.initial_step = _as_number(cfg.initial_step, "initial_step")
        if cfg.initial_step <= 0:
            raise ConfigError(f"initial_step must be positive, got {cfg.initial_step}")
    cfg.tolerance = _as_number(cfg.tolerance, "tolerance")
    if cfg.tolerance < 0:
        raise ConfigError(f"tolerance must be >= 0, got {cfg.tolerance}")
    return cfg


def _require(value, what: str):
    if value is None:
        raise ConfigError(f"{what} is required (flag or config file)")
    return value


# ---------------------------------------------------------------------------
# Shared pipeline pieces


def _read_series(cfg: RunConfig) -> LoadSeries:
    path = _require(cfg.input_path, "--input")
    with open(path, encoding="utf-8-sig", newline="") as fh:
        return parse_load_csv(fh, label=cfg.source)


def _load_model_file(path: str) -> tuple[AnfisModel, TrainHistory]:
    return load_model(Path(path).read_bytes())


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _estimate_pipeline(cfg: RunConfig, model: AnfisModel):
    series = _read_series(cfg)
    dataset = build_dataset(series, FactorKind.from_string(cfg.factor_kind))
    estimate = predict_series(model, dataset)
    return series, dataset, estimate


def _report_line(report: EvalReport) -> str:
    return (
        f"overall MAPE: {report.mape:.4f}%  RMSE: {report.rmse:.4f} kW  "
        f"(n={report.n}, zero-actual skipped={report.n_zero_skipped})"
    )


# ---------------------------------------------------------------------------
# Commands


def cmd_convert(args: argparse.Namespace) -> int:
    out_path = Path(_require(args.out, "--out"))
    with open(_require(args.input, "--input"), encoding="utf-8-sig", newline="") as fh:
        text = convert_wide_csv(fh)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_text(out_path, text)
    print(f"wrote {out_path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    series = _read_series(cfg)
    report = validate_series(series)
    print(f"samples: {report.n}")
    print(f"span: {series.start:%Y-%m-%dT%H:%M} .. {series.timestamp_at(len(series) - 1):%Y-%m-%dT%H:%M}")
    print(f"gaps: {report.gaps}")
    print(f"negatives: {report.negatives}")
    print(f"min: {report.minimum!r} kW")
    print(f"max: {report.maximum!r} kW")
    print(f"mean: {report.mean!r} kW")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    series = _read_series(cfg)
    dataset = build_dataset(series, FactorKind.from_string(cfg.factor_kind))
    train_view, check_view = split_train_check(dataset)
    train_batch = Batch(train_view.inputs(), train_view.targets())
    check_batch = Batch(check_view.inputs(), check_view.targets())

    inputs = train_batch.inputs
    ranges = [(float(inputs[:, i].min()), float(inputs[:, i].max())) for i in range(inputs.shape[1])]
    model0 = init_grid(ranges, [cfg.mfs_per_input] * inputs.shape[1])
    tcfg = TrainConfig(
        epochs=cfg.epochs,
        initial_step=cfg.initial_step,
        error_tolerance=cfg.tolerance,
    )
    best, history = train(model0, train_batch, check_batch, tcfg)

    out = _out_dir(cfg)
    (out / "model.json").write_bytes(save_model(best, history))
    buffer = io.StringIO()
    write_history_csv(history, buffer)
    _write_text(out / "history.csv", buffer.getvalue())
    if args.figures:
        from . import figures

        figures.save_history_figure(history, out / "history.png")

    n_params = best.n_linear_params + best.n_premise_params
    print(
        f"trained model: {best.n_rules} rules, {best.n_linear_params} linear parameters, "
        f"{best.n_premise_params} nonlinear parameters"
    )
    print(
        f"training rows: {len(train_batch)}, checking rows: {len(check_batch)}, "
        f"data/parameter ratio: {len(train_batch) / n_params:.1f}"
    )
    if history.best_epoch is not None:
        best_record = history.records[history.best_epoch]
        print(f"best epoch: {history.best_epoch + 1} (checking RMSE {best_record.check_rmse:.4f} kW)")
    print(f"wrote {out / 'model.json'} and {out / 'history.csv'}")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    model, _ = _load_model_file(_require(args.model, "--model"))
    series, dataset, estimate = _estimate_pipeline(cfg, model)
    actual = dataset.target

    out = _out_dir(cfg)
    buffer = io.StringIO()
    write_estimate_csv(actual, estimate, buffer)
    _write_text(out / "estimate.csv", buffer.getvalue())

    report = evaluate(actual, estimate)
    line = _report_line(report)
    _write_text(out / "report.txt", line + "\n")
    if args.figures:
        from . import figures

        figures.save_estimate_figure(actual, estimate, out / "estimate.png", label=series.label)
        figures.save_error_figure(actual - estimate, out / "error.png")
    print(line)
    print(f"wrote {out / 'estimate.csv'}")
    return 0


def _emit_selection(
    out: Path,
    stem: str,
    selection: RlcSelection,
    overall: EvalReport,
    actual: np.ndarray,
    estimate: np.ndarray,
    ranges,
    render: bool,
) -> None:
    buffer = io.StringIO()
    write_curve_csv(selection, buffer)
    _write_text(out / f"{stem}.csv", buffer.getvalue())

    buffer = io.StringIO()
    write_selection_report(selection, overall, buffer)
    _write_text(out / f"{stem}_report.json", buffer.getvalue())

    buffer = io.StringIO()
    write_scores_csv(selection, buffer)
    scores_name = f"scores_{stem.removeprefix('rlc_')}.csv"
    _write_text(out / scores_name, buffer.getvalue())

    if render:
        from . import figures

        figures.save_selection_figure(selection, actual, estimate, ranges, out / f"{stem}.png")

    score = selection.selected_score
    print(
        f"{selection.kind} selection, month {selection.month}: selected index "
        f"{selection.selected} (window {selection.selected + 1}/8, {score.year_week_label}), "
        f"MAPE {score.mape:.4f}%"
    )


def cmd_select(args: argparse.Namespace) -> int:
    kind = _require(args.kind, "--kind")
    cfg = resolve_config(args, selection_kind=kind)
    month = _require(cfg.month, "--month")
    model, _ = _load_model_file(_require(args.model, "--model"))
    series, dataset, estimate = _estimate_pipeline(cfg, model)
    actual = dataset.target

    mslice = month_slice(series, month)
    overall = evaluate(actual, estimate)
    out = _out_dir(cfg)

    if kind == "weekly":
        selection = select_weekly_rlc(actual, estimate, mslice)
        _emit_selection(
            out, "rlc_weekly", selection, overall, actual, estimate,
            mslice.week_ranges, args.figures,
        )
    else:
        for weekday in range(7):
            selection = select_daily_rlc(actual, estimate, mslice, weekday)
            _emit_selection(
                out, f"rlc_daily_{WEEKDAY_NAMES[weekday]}", selection, overall,
                actual, estimate, mslice.weekday_groups[weekday], args.figures,
            )
    print(_report_line(overall))
    return 0


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # map usage problems onto the config exit code
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rlckit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p: argparse.ArgumentParser, *, model=False, month_kind=False):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--input", help="canonical load CSV (timestamp,load_kw)")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--source", help="'system' or 'node:<id>' (labels the data)")
        p.add_argument("--factor-kind", dest="factor_kind",
                       choices=[k.value for k in FactorKind],
                       help="model factor variant for the input features")
        if model:
            p.add_argument("--model", help="trained model file from 'train'")
        if month_kind:
            p.add_argument("--month", type=int, help="calendar month 1-12")
            p.add_argument("--kind", choices=["weekly", "daily"], help="curve span to select")
        p.add_argument("--no-figures", dest="figures", action="store_false",
                       help="skip rendering PNG figures next to the CSV outputs")
        p.set_defaults(figures=True)

    p_convert = sub.add_parser("convert", help="expand wide 'date,h1..h24' CSV to canonical form")
    p_convert.add_argument("--input", required=True, help="wide-format CSV")
    p_convert.add_argument("--out", required=True, help="canonical CSV to write")
    p_convert.set_defaults(func=cmd_convert)

    p_validate = sub.add_parser("validate", help="parse a canonical CSV and report statistics")
    add_common(p_validate)
    p_validate.set_defaults(func=cmd_validate)

    p_train = sub.add_parser("train", help="fit the estimator and write model + history")
    add_common(p_train)
    p_train.add_argument("--mfs", type=int, dest="mfs", help="membership functions per input (2 or 3)")
    p_train.add_argument("--epochs", type=int, help="training epochs (default 100)")
    p_train.add_argument("--initial-step", dest="initial_step", type=float,
                         help="initial premise step size")
    p_train.add_argument("--tolerance", type=float, help="early-stop training RMSE")
    p_train.set_defaults(func=cmd_train)

    p_estimate = sub.add_parser("estimate", help="run a model over a series and export the fit")
    add_common(p_estimate, model=True)
    p_estimate.set_defaults(func=cmd_estimate)

    p_select = sub.add_parser("select", help="pick weekly/daily representative curves for a month")
    add_common(p_select, model=True, month_kind=True)
    p_select.set_defaults(func=cmd_select)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except AllWindowsMissing as exc:
        print(f"selection infeasible: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
