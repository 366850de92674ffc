"""Representative load curves from hourly load history.

Pipeline: parse a two-year hourly series, build 4-input/1-target feature
rows, train a neuro-fuzzy estimator with hybrid learning, score the fit,
and pick the minimum-MAPE weekly or per-weekday window as the
representative curve.
"""

from .anfis import (
    AnfisModel,
    Batch,
    BellMF,
    ForwardTrace,
    TrainConfig,
    TrainHistory,
    adapt_step,
    fit_consequents,
    forward,
    gbell_eval,
    gbell_grad,
    init_grid,
    load_model,
    predict_batch,
    predict_series,
    premise_gradient,
    save_model,
    train,
    train_epoch,
)
from .features import (
    Dataset,
    DatasetView,
    FactorKind,
    FeatureRow,
    build_dataset,
    model_factor,
    split_train_check,
    write_dataset_csv,
)
from .ingest import (
    LoadSeries,
    MonthSlice,
    SeriesReport,
    month_slice,
    parse_load_csv,
    validate_series,
)
from .rlc import (
    EvalReport,
    RlcSelection,
    WindowScore,
    evaluate,
    mape,
    rmse,
    select_daily_rlc,
    select_weekly_rlc,
)

__version__ = "0.1.0"

__all__ = [
    "AnfisModel",
    "Batch",
    "BellMF",
    "Dataset",
    "DatasetView",
    "EvalReport",
    "FactorKind",
    "FeatureRow",
    "ForwardTrace",
    "LoadSeries",
    "MonthSlice",
    "RlcSelection",
    "SeriesReport",
    "TrainConfig",
    "TrainHistory",
    "WindowScore",
    "adapt_step",
    "build_dataset",
    "evaluate",
    "fit_consequents",
    "forward",
    "gbell_eval",
    "gbell_grad",
    "init_grid",
    "load_model",
    "mape",
    "model_factor",
    "month_slice",
    "parse_load_csv",
    "predict_batch",
    "predict_series",
    "premise_gradient",
    "rmse",
    "save_model",
    "select_daily_rlc",
    "select_weekly_rlc",
    "split_train_check",
    "train",
    "train_epoch",
    "validate_series",
    "write_dataset_csv",
    "__version__",
]
