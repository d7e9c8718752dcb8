"""Federated AdaBoost over pluggable weak learners."""

from ._fedboost import (
    Ensemble,
    FedBoostError,
    Plan,
    WeakModel,
    decode_model,
    f1_macro,
    families,
    fit,
    load_ensemble,
    load_plan,
    parse_plan,
    read_csv,
    sequential_adaboost,
    simulate,
    split_iid,
)

__all__ = [
    "Ensemble",
    "FedBoostError",
    "Plan",
    "WeakModel",
    "decode_model",
    "f1_macro",
    "families",
    "fit",
    "load_ensemble",
    "load_plan",
    "parse_plan",
    "read_csv",
    "sequential_adaboost",
    "simulate",
    "split_iid",
]
