"""Model-agnostic symbolic counterfactual explanations for time-series classifiers."""

__version__ = "0.1.0"

from mascots._backend import BACKEND
from mascots.borf import BorfTransform, auto_configure, transform_dataset, transform_one
from mascots.dataset_io import Dataset, TimeSeries, load_csv, load_ts, train_test_split
from mascots.engine import CounterfactualResult, EngineConfig, explain, render_plot_json, render_text
from mascots.evaluation import evaluate_run, iforest_fit, plausibility, proximity, sparsity, validity
from mascots.models import attribute, knn1_fit, ridge_borf_fit, surrogate_fidelity, surrogate_fit
from mascots.pipeline import FittedModel, fit_model, load_model, save_model

__all__ = [
    "BACKEND",
    "BorfTransform",
    "CounterfactualResult",
    "Dataset",
    "EngineConfig",
    "FittedModel",
    "TimeSeries",
    "attribute",
    "auto_configure",
    "evaluate_run",
    "explain",
    "fit_model",
    "iforest_fit",
    "knn1_fit",
    "load_csv",
    "load_model",
    "load_ts",
    "plausibility",
    "proximity",
    "render_plot_json",
    "render_text",
    "ridge_borf_fit",
    "save_model",
    "sparsity",
    "surrogate_fidelity",
    "surrogate_fit",
    "train_test_split",
    "transform_dataset",
    "transform_one",
    "validity",
]
