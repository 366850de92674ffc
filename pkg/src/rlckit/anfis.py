"""Neuro-fuzzy estimator: bell memberships, grid rules, hybrid training.

The network is a first-order Takagi-Sugeno system.  Premise parameters are
the ``(a, b, c)`` triples of generalized bell curves, one set per input;
the rule base is the full Cartesian product of the per-input curves; each
rule's output is an affine function of the inputs.  Training alternates an
exact linear least-squares solve for the rule coefficients with a
normalized gradient step on the bell parameters.

Numerical conventions that tests rely on:

* The forward pass accumulates rule products, the firing-strength total,
  rule outputs, and the final blend in a fixed sequential order, so a naive
  per-sample loop reproduces it bit for bit.
* Gradient components are reduced over samples with exact summation
  (``math.fsum``); the result is independent of batching quirks and
  duplicating a batch exactly doubles the gradient.
* Nothing here draws random numbers: identical inputs give identical
  trained models.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DataError

MODEL_FORMAT_VERSION = 1

# Safety floors applied after each premise update: widths stay positive
# relative to the input range, shape exponents stay >= 1.
A_FLOOR_SCALE = 1e-9
B_FLOOR = 1.0

DEFAULT_STEP_INCREASE = 1.1
DEFAULT_STEP_DECREASE = 0.9
# Fraction of the mean input range used for the default initial step.
DEFAULT_STEP_SCALE = 0.01


class DegenerateRange(DataError):
    pass


class EmptyBatch(DataError):
    pass


class MalformedModelFile(DataError):
    pass


class VersionMismatch(DataError):
    pass


@dataclass(frozen=True)
class BellMF:
    """Generalized bell curve mu(x) = 1 / (1 + |(x - c) / a|^(2b))."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class Batch:
    """Training rows: inputs (N, n) and targets (N,)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.inputs, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.targets, dtype=np.float64))
        if x.ndim != 2 or t.ndim != 1 or x.shape[0] != t.shape[0]:
            raise ValueError("inputs must be (N, n) and targets (N,)")
        x.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", t)

    def __len__(self) -> int:
        return self.targets.shape[0]


@dataclass(frozen=True)
class AnfisModel:
    """Immutable parameter set: premise curves, rule grid, consequent matrix."""

    mfs: tuple[tuple[BellMF, ...], ...]
    consequents: np.ndarray
    input_ranges: tuple[tuple[float, float], ...]

    def __post_init__(self):
        mfs = tuple(tuple(per_input) for per_input in self.mfs)
        object.__setattr__(self, "mfs", mfs)
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.input_ranges)
        object.__setattr__(self, "input_ranges", ranges)
        if len(ranges) != len(mfs):
            raise ValueError("input_ranges and mfs must agree on input count")
        coef = np.ascontiguousarray(np.asarray(self.consequents, dtype=np.float64))
        expected = (self.n_rules, self.n_inputs + 1)
        if coef.shape != expected:
            raise ValueError(f"consequents must have shape {expected}, got {coef.shape}")
        coef.flags.writeable = False
        object.__setattr__(self, "consequents", coef)

    @property
    def n_inputs(self) -> int:
        return len(self.mfs)

    @property
    def mfs_per_input(self) -> tuple[int, ...]:
        return tuple(len(per_input) for per_input in self.mfs)

    @property
    def n_rules(self) -> int:
        return int(np.prod(self.mfs_per_input))

    @property
    def n_linear_params(self) -> int:
        return self.n_rules * (self.n_inputs + 1)

    @property
    def n_premise_params(self) -> int:
        return 3 * sum(self.mfs_per_input)

    @cached_property
    def rule_grid(self) -> np.ndarray:
        """(R, n) MF index per rule; the first input varies slowest."""
        grid = np.array(
            list(itertools.product(*(range(m) for m in self.mfs_per_input))),
            dtype=np.intp,
        )
        grid.flags.writeable = False
        return grid


@dataclass(frozen=True)
class ForwardTrace:
    """Layer-by-layer record of one forward evaluation."""

    mu: tuple[np.ndarray, ...]
    w: np.ndarray
    w_norm: np.ndarray
    f: np.ndarray
    y: float


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    initial_step: float | None = None  # None: DEFAULT_STEP_SCALE * mean input range
    step_increase: float = DEFAULT_STEP_INCREASE
    step_decrease: float = DEFAULT_STEP_DECREASE
    error_tolerance: float = 0.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 < self.step_decrease < 1.0 < self.step_increase:
            raise ValueError("need 0 < step_decrease < 1 < step_increase")
        if self.initial_step is not None and self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if self.error_tolerance < 0:
            raise ValueError("error_tolerance must be >= 0")


@dataclass(frozen=True)
class EpochRecord:
    train_rmse: float
    check_rmse: float
    step: float


@dataclass(frozen=True)
class TrainHistory:
    """Per-epoch RMSE trace plus the config the run resolved to."""

    records: tuple[EpochRecord, ...]
    best_epoch: int | None
    config: TrainConfig


# ---------------------------------------------------------------------------
# Membership function


def gbell_eval(x, mf: BellMF):
    """Evaluate the bell curve at ``x`` (scalar or array).

    Scalars are evaluated through a length-1 array so that the scalar and
    vectorized paths agree bit for bit.
    """
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    if scalar:
        arr = arr.reshape(1)
    u = (arr - mf.c) / mf.a
    with np.errstate(over="ignore"):
        t = np.abs(u) ** (2.0 * mf.b)
    out = 1.0 / (1.0 + t)
    return float(out[0]) if scalar else out


def gbell_grad(x, mf: BellMF):
    """Partials (d mu/da, d mu/db, d mu/dc) of the bell curve at ``x``.

    All three vanish at x = c by continuous extension.  The shared factor
    t / (1 + t)^2 is formed directly so overflowing t degrades to an exact
    zero gradient instead of NaN.
    """
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    if scalar:
        arr = arr.reshape(1)
    u = (arr - mf.c) / mf.a
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        t = np.abs(u) ** (2.0 * mf.b)
        s = np.where(np.isinf(t), 0.0, t / ((1.0 + t) ** 2))
        da = (2.0 * mf.b / mf.a) * s
        db = np.where(u == 0.0, 0.0, -2.0 * s * np.log(np.abs(u)))
        dc = np.where(u == 0.0, 0.0, 2.0 * mf.b * s / (arr - mf.c))
    if scalar:
        return float(da[0]), float(db[0]), float(dc[0])
    return da, db, dc


# ---------------------------------------------------------------------------
# Model construction and forward pass


def init_grid(
    input_ranges: Sequence[tuple[float, float]],
    mfs_per_input: Sequence[int],
) -> AnfisModel:
    """Grid-partition initialization over the observed input ranges.

    Centers are equally spaced from min to max inclusive, widths are half
    the center spacing, shape exponents start at 2, and all consequents
    start at zero.
    """
    if len(input_ranges) != len(mfs_per_input):
        raise ValueError("one MF count per input range is required")
    mfs: list[tuple[BellMF, ...]] = []
    for (lo, hi), count in zip(input_ranges, mfs_per_input):
        if count < 2:
            raise ValueError("grid initialization needs at least 2 MFs per input")
        if not lo < hi:
            raise DegenerateRange(f"input range ({lo}, {hi}) has no width")
        spacing = (hi - lo) / (count - 1)
        mfs.append(tuple(BellMF(a=spacing / 2.0, b=2.0, c=lo + spacing * j) for j in range(count)))
    model = AnfisModel(
        mfs=tuple(mfs),
        consequents=np.zeros((int(np.prod([len(m) for m in mfs])), len(mfs) + 1)),
        input_ranges=tuple(input_ranges),
    )
    return model


def _memberships(model: AnfisModel, X: np.ndarray) -> list[np.ndarray]:
    """Per-input (N, m_i) membership matrices."""
    return [
        np.column_stack([gbell_eval(X[:, i], mf) for mf in model.mfs[i]])
        for i in range(model.n_inputs)
    ]


def _layers(model: AnfisModel, X: np.ndarray):
    """All forward quantities for a batch, with pinned accumulation order.

    Returns (mu, sel, w, W, w_norm, f, y) where sel[:, r, i] is the selected
    membership of input i under rule r.
    """
    n = model.n_inputs
    grid = model.rule_grid
    R = grid.shape[0]
    N = X.shape[0]

    mu = _memberships(model, X)
    sel = np.empty((N, R, n))
    for i in range(n):
        sel[:, :, i] = mu[i][:, grid[:, i]]

    # Rule firing strengths: product over inputs in input order.
    w = sel[:, :, 0].copy()
    for i in range(1, n):
        w *= sel[:, :, i]

    # Strength total: sum over rules in rule order.
    total = w[:, 0].copy()
    for r in range(1, R):
        total += w[:, r]

    w_norm = np.empty_like(w)
    dead = total == 0.0
    if dead.any():
        # Unreachable with true bell curves (mu > 0) but kept total: fall
        # back to a uniform blend.
        w_norm[dead, :] = 1.0 / R
    alive = ~dead
    w_norm[alive, :] = w[alive, :] / total[alive, None]

    # Rule outputs: affine combination accumulated in column order.
    coef = model.consequents
    f = np.empty((N, R))
    for r in range(R):
        acc = coef[r, 0] * X[:, 0]
        for j in range(1, n):
            acc = acc + coef[r, j] * X[:, j]
        acc = acc + coef[r, n]
        f[:, r] = acc

    # Output: blend over rules in rule order.
    y = w_norm[:, 0] * f[:, 0]
    for r in range(1, R):
        y = y + w_norm[:, r] * f[:, r]

    return mu, sel, w, total, w_norm, f, y


def forward(model: AnfisModel, x) -> ForwardTrace:
    """Evaluate one input vector and return the full layer trace."""
    X = np.asarray(x, dtype=np.float64).reshape(1, model.n_inputs)
    mu, _, w, _, w_norm, f, y = _layers(model, X)
    return ForwardTrace(
        mu=tuple(m[0] for m in mu),
        w=w[0],
        w_norm=w_norm[0],
        f=f[0],
        y=float(y[0]),
    )


def predict_batch(model: AnfisModel, X: np.ndarray) -> np.ndarray:
    """Outputs for an (N, n) input matrix."""
    X = np.asarray(X, dtype=np.float64)
    return _layers(model, X)[6]


def predict_series(model: AnfisModel, dataset) -> np.ndarray:
    """Estimate series over a feature dataset; invalid rows give NaN."""
    from .features import N_INPUTS  # local import avoids a cycle at module load

    if model.n_inputs != N_INPUTS:
        raise ValueError(f"model has {model.n_inputs} inputs, dataset rows have {N_INPUTS}")
    out = np.full(len(dataset), np.nan)
    idx = dataset.valid_indices()
    if idx.size:
        out[idx] = predict_batch(model, dataset.inputs_at(idx))
    return out


# ---------------------------------------------------------------------------
# Hybrid learning


def fit_consequents(model: AnfisModel, batch: Batch) -> AnfisModel:
    """Exact least-squares solve for all rule coefficients, premises fixed.

    The design matrix row for sample s concatenates w_norm[r] * (x_s, 1)
    over rules; the solver returns the minimum-norm minimizer on rank
    deficiency.
    """
    if len(batch) == 0:
        raise EmptyBatch("cannot fit consequents on an empty batch")
    X, T = batch.inputs, batch.targets
    n, R = model.n_inputs, model.n_rules
    w_norm = _layers(model, X)[4]
    ext = np.concatenate([X, np.ones((X.shape[0], 1))], axis=1)
    design = (w_norm[:, :, None] * ext[:, None, :]).reshape(X.shape[0], R * (n + 1))
    coef, *_ = np.linalg.lstsq(design, T, rcond=None)
    return replace(model, consequents=coef.reshape(R, n + 1))


def premise_gradient(model: AnfisModel, batch: Batch) -> list[np.ndarray]:
    """Gradient of the batch SSE w.r.t. every premise parameter.

    Returns one (m_i, 3) array per input with columns (d/da, d/db, d/dc).
    Per-parameter reductions over samples use exact summation.
    """
    if len(batch) == 0:
        raise EmptyBatch("cannot take a gradient on an empty batch")
    X, T = batch.inputs, batch.targets
    n = model.n_inputs
    grid = model.rule_grid

    _, sel, _, total, _, f, y = _layers(model, X)
    residual = y - T

    # dy/dw_r = (f_r - y) / W; zero-total samples use the constant uniform
    # blend, which has no premise dependence.
    dyw = np.zeros_like(f)
    alive = total != 0.0
    dyw[alive, :] = (f[alive, :] - y[alive, None]) / total[alive, None]

    grads: list[np.ndarray] = []
    for i in range(n):
        others = np.prod(np.delete(sel, i, axis=2), axis=2)  # (N, R)
        contrib = dyw * others
        # Scatter-add over rules in rule order; keeps every per-sample value
        # independent of the batch size (a matmul here would not).
        dy_dmu = np.zeros((X.shape[0], len(model.mfs[i])))
        for r in range(grid.shape[0]):
            dy_dmu[:, grid[r, i]] += contrib[:, r]

        gi = np.empty((len(model.mfs[i]), 3))
        for j, mf in enumerate(model.mfs[i]):
            da, db, dc = gbell_grad(X[:, i], mf)
            base = 2.0 * residual * dy_dmu[:, j]
            gi[j, 0] = math.fsum(base * da)
            gi[j, 1] = math.fsum(base * db)
            gi[j, 2] = math.fsum(base * dc)
        grads.append(gi)
    return grads


def flatten_gradient(grads: list[np.ndarray]) -> np.ndarray:
    """Input-major, then MF, then (a, b, c)."""
    return np.concatenate([g.ravel() for g in grads])


def _batch_rmse(model: AnfisModel, batch: Batch) -> float:
    r = predict_batch(model, batch.inputs) - batch.targets
    return float(np.sqrt(np.mean(r * r)))


def train_epoch(model: AnfisModel, batch: Batch, step: float) -> tuple[AnfisModel, float]:
    """One hybrid pass: LSE consequent fit, then a normalized premise step.

    The premise update moves the flattened (a, b, c) vector a Euclidean
    distance of ``step`` along the negative gradient, then clamps widths to
    the per-input floor and shape exponents to 1.  The reported RMSE is that
    of the post-fit model, before the premise step.
    """
    fitted = fit_consequents(model, batch)
    train_rmse = _batch_rmse(fitted, batch)

    if step == 0.0:
        return fitted, train_rmse

    grads = premise_gradient(fitted, batch)
    norm = math.sqrt(math.fsum(float(v) * float(v) for g in grads for v in g.ravel()))
    if norm == 0.0:
        return fitted, train_rmse

    new_mfs: list[tuple[BellMF, ...]] = []
    for i, (per_input, gi) in enumerate(zip(fitted.mfs, grads)):
        lo, hi = fitted.input_ranges[i]
        a_floor = A_FLOOR_SCALE * (hi - lo)
        updated = []
        for mf, row in zip(per_input, gi):
            a = max(mf.a - step * float(row[0]) / norm, a_floor)
            b = max(mf.b - step * float(row[1]) / norm, B_FLOOR)
            c = mf.c - step * float(row[2]) / norm
            updated.append(BellMF(a=a, b=b, c=c))
        new_mfs.append(tuple(updated))
    return replace(fitted, mfs=tuple(new_mfs)), train_rmse


def adapt_step(history: Sequence[float], step: float, cfg: TrainConfig) -> float:
    """Step-size heuristic over the training RMSEs since the last change.

    Four strictly decreasing values grow the step; four oscillating values
    shrink it; anything else (including short histories) leaves it alone.
    """
    if len(history) < 4:
        return step
    r1, r2, r3, r4 = history[-4:]
    d1, d2, d3 = r2 - r1, r3 - r2, r4 - r3
    if d1 < 0 and d2 < 0 and d3 < 0:
        return step * cfg.step_increase
    if d1 * d2 < 0 and d2 * d3 < 0:
        return step * cfg.step_decrease
    return step


def train(
    model: AnfisModel,
    train_batch: Batch,
    check_batch: Batch,
    cfg: TrainConfig | None = None,
) -> tuple[AnfisModel, TrainHistory]:
    """Run hybrid learning and return the best-checking-error snapshot.

    Each epoch's snapshot is the model with that epoch's least-squares
    consequents and the premise parameters it started from; checking RMSE
    is scored on the snapshot, and the snapshot with the global minimum is
    returned.  Training stops early once the training RMSE reaches the
    tolerance.
    """
    cfg = cfg or TrainConfig()
    if len(train_batch) == 0 or len(check_batch) == 0:
        raise EmptyBatch("training and checking batches must both be non-empty")

    if cfg.initial_step is not None:
        step = cfg.initial_step
    else:
        widths = [hi - lo for lo, hi in model.input_ranges]
        step = DEFAULT_STEP_SCALE * (sum(widths) / len(widths))
    resolved = replace(cfg, initial_step=step)

    records: list[EpochRecord] = []
    recent: list[float] = []
    best_model = model
    best_epoch: int | None = None
    best_check = math.inf
    current = model

    for epoch in range(cfg.epochs):
        stepped, train_rmse = train_epoch(current, train_batch, step)
        snapshot = replace(current, consequents=stepped.consequents)
        check_rmse = _batch_rmse(snapshot, check_batch)
        records.append(EpochRecord(train_rmse=train_rmse, check_rmse=check_rmse, step=step))

        if check_rmse < best_check:
            best_model, best_check, best_epoch = snapshot, check_rmse, epoch

        if train_rmse <= cfg.error_tolerance:
            break

        recent.append(train_rmse)
        new_step = adapt_step(recent, step, resolved)
        if new_step != step:
            recent.clear()
            step = new_step
        current = stepped

    return best_model, TrainHistory(records=tuple(records), best_epoch=best_epoch, config=resolved)


# ---------------------------------------------------------------------------
# Persistence

# Reals are serialized with 17 significant digits, which round-trips any
# float64 exactly; a trailing ".0" is forced so values re-parse as floats
# (and -0.0 keeps its sign).


def _fmt_real(x: float) -> str:
    s = format(float(x), ".17g")
    if not any(ch in s for ch in ".eE"):
        s += ".0"
    return s


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(key)}: {_emit(value, indent + 1)}'
            for key, value in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_emit(value, indent + 1)}" for value in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_real(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def save_model(model: AnfisModel, history: TrainHistory) -> bytes:
    """Serialize model plus its training history as self-describing JSON."""
    cfg = history.config
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "n_inputs": model.n_inputs,
        "mfs": [
            [{"a": mf.a, "b": mf.b, "c": mf.c} for mf in per_input]
            for per_input in model.mfs
        ],
        "consequents": [float(v) for v in model.consequents.ravel()],
        "input_ranges": [[lo, hi] for lo, hi in model.input_ranges],
        "train_config": {
            "epochs": cfg.epochs,
            "initial_step": cfg.initial_step,
            "step_increase": cfg.step_increase,
            "step_decrease": cfg.step_decrease,
            "error_tolerance": cfg.error_tolerance,
        },
        "history": {
            "records": [
                {"train_rmse": r.train_rmse, "check_rmse": r.check_rmse, "step": r.step}
                for r in history.records
            ],
            "best_epoch": history.best_epoch,
        },
    }
    return (_emit(doc, 0) + "\n").encode("utf-8")


def load_model(data: bytes | str) -> tuple[AnfisModel, TrainHistory]:
    """Inverse of :func:`save_model`; round-trips every parameter bit-exactly."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedModelFile(f"model file is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedModelFile(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedModelFile("model file must contain a JSON object")

    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"unsupported model format_version {version!r}")

    try:
        n = int(doc["n_inputs"])
        mfs = tuple(
            tuple(BellMF(a=float(m["a"]), b=float(m["b"]), c=float(m["c"])) for m in per_input)
            for per_input in doc["mfs"]
        )
        ranges = tuple((float(lo), float(hi)) for lo, hi in doc["input_ranges"])
        flat = np.array([float(v) for v in doc["consequents"]], dtype=np.float64)
        rules = int(np.prod([len(per_input) for per_input in mfs]))
        if len(mfs) != n or flat.size != rules * (n + 1):
            raise ValueError("inconsistent structure")
        model = AnfisModel(
            mfs=mfs,
            consequents=flat.reshape(rules, n + 1),
            input_ranges=ranges,
        )
        cfg_doc = doc["train_config"]
        cfg = TrainConfig(
            epochs=int(cfg_doc["epochs"]),
            initial_step=None if cfg_doc["initial_step"] is None else float(cfg_doc["initial_step"]),
            step_increase=float(cfg_doc["step_increase"]),
            step_decrease=float(cfg_doc["step_decrease"]),
            error_tolerance=float(cfg_doc["error_tolerance"]),
        )
        hist_doc = doc["history"]
        records = tuple(
            EpochRecord(
                train_rmse=float(r["train_rmse"]),
                check_rmse=float(r["check_rmse"]),
                step=float(r["step"]),
            )
            for r in hist_doc["records"]
        )
        best = hist_doc["best_epoch"]
        history = TrainHistory(
            records=records,
            best_epoch=None if best is None else int(best),
            config=cfg,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise MalformedModelFile(f"model file structure is invalid: {exc}") from None
    return model, history
