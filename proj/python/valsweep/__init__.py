"""Validation-strategy sweeps for binary classifiers (C++ core)."""

from ._valsweep import (
    Dataset,
    ValsweepError,
    average_precision,
    brier,
    choose_scorer,
    compute_all,
    default_config,
    dump_model,
    f1_weighted,
    fit_predict,
    grid,
    load_csv,
    load_model_predict,
    mcc,
    models,
    roc_auc,
    run,
    stratified_holdout,
    stratified_kfold,
)

__all__ = [
    "Dataset",
    "ValsweepError",
    "average_precision",
    "brier",
    "choose_scorer",
    "compute_all",
    "default_config",
    "dump_model",
    "f1_weighted",
    "fit_predict",
    "grid",
    "load_csv",
    "load_model_predict",
    "mcc",
    "models",
    "roc_auc",
    "run",
    "stratified_holdout",
    "stratified_kfold",
]
