"""Shared fixtures, generators, and independent oracles."""

from __future__ import annotations

import itertools
from datetime import datetime, timedelta

import numpy as np
import pytest

import rlckit as rk

START_2009 = datetime(2009, 1, 1)


def canonical_csv(start: datetime, values) -> str:
    """Render values as canonical timestamp,load_kw text."""
    lines = ["timestamp,load_kw"]
    ts = start
    for v in values:
        lines.append(f"{ts:%Y-%m-%dT%H:%M},{float(v)!r}")
        ts += timedelta(hours=1)
    return "\n".join(lines) + "\n"


def synthetic_values(
    n: int,
    seed: int = 2026,
    base: float = 1000.0,
    daily_amp: float = 0.30,
    weekly_amp: float = 0.05,
    noise: float = 0.01,
) -> np.ndarray:
    """Daily + weekly sinusoids with multiplicative noise; always positive."""
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    signal = base * (
        1.0 + daily_amp * np.sin(2 * np.pi * t / 24) + weekly_amp * np.sin(2 * np.pi * t / 168)
    )
    return signal * (1.0 + noise * rng.standard_normal(n))


def synthetic_series(n: int = 17520, start: datetime = START_2009, **kwargs) -> rk.LoadSeries:
    return rk.LoadSeries(start=start, values=synthetic_values(n, **kwargs), label="synthetic")


@pytest.fixture(scope="session")
def two_year_series() -> rk.LoadSeries:
    """The 17520-sample shape of the reference dataset, synthesized."""
    return synthetic_series(17520)


def random_model(rng: np.random.Generator, n_inputs: int = 4, mfs_per_input=2) -> rk.AnfisModel:
    """A random but well-conditioned model for oracle comparisons."""
    if isinstance(mfs_per_input, int):
        mfs_per_input = [mfs_per_input] * n_inputs
    mfs = tuple(
        tuple(
            rk.BellMF(
                a=float(rng.uniform(0.5, 5.0)),
                b=float(rng.uniform(1.0, 4.0)),
                c=float(rng.uniform(-5.0, 5.0)),
            )
            for _ in range(m)
        )
        for m in mfs_per_input
    )
    rules = int(np.prod(mfs_per_input))
    return rk.AnfisModel(
        mfs=mfs,
        consequents=rng.normal(size=(rules, n_inputs + 1)),
        input_ranges=((-5.0, 5.0),) * n_inputs,
    )


def naive_forward(model: rk.AnfisModel, x) -> float:
    """Explicit-loop re-implementation of the forward pass.

    Rules are enumerated with itertools.product and every reduction is a
    sequential Python-float accumulation in the same canonical order the
    library defines, so agreement must be bit-exact.
    """
    n = model.n_inputs
    x = [float(v) for v in x]
    mu = [[rk.gbell_eval(x[i], mf) for mf in model.mfs[i]] for i in range(n)]

    combos = list(itertools.product(*(range(len(per)) for per in model.mfs)))
    w = []
    for combo in combos:
        p = mu[0][combo[0]]
        for i in range(1, n):
            p = p * mu[i][combo[i]]
        w.append(p)

    total = w[0]
    for r in range(1, len(w)):
        total = total + w[r]
    if total == 0.0:
        w_norm = [1.0 / len(w)] * len(w)
    else:
        w_norm = [wr / total for wr in w]

    coef = model.consequents
    f = []
    for r in range(len(combos)):
        acc = float(coef[r, 0]) * x[0]
        for j in range(1, n):
            acc = acc + float(coef[r, j]) * x[j]
        acc = acc + float(coef[r, n])
        f.append(acc)

    y = w_norm[0] * f[0]
    for r in range(1, len(w)):
        y = y + w_norm[r] * f[r]
    return y


def batch_sse(model: rk.AnfisModel, batch: rk.Batch) -> float:
    r = rk.predict_batch(model, batch.inputs) - batch.targets
    return float(np.dot(r, r))


def perturb_mf(model: rk.AnfisModel, i: int, j: int, name: str, delta: float) -> rk.AnfisModel:
    """Copy of ``model`` with one premise parameter nudged by ``delta``."""
    mfs = [list(per) for per in model.mfs]
    mf = mfs[i][j]
    kwargs = {"a": mf.a, "b": mf.b, "c": mf.c}
    kwargs[name] += delta
    mfs[i][j] = rk.BellMF(**kwargs)
    return rk.AnfisModel(
        mfs=tuple(tuple(per) for per in mfs),
        consequents=model.consequents,
        input_ranges=model.input_ranges,
    )
