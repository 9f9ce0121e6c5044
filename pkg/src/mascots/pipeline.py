"""Fitting the black-box and surrogate together, and the persisted model bundle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mascots.borf import BorfTransform, dense_counts
from mascots.dataset_io import Dataset, dataset_from_dict, dataset_to_dict
from mascots.engine import CounterfactualResult, EngineConfig, explain
from mascots.errors import ParseError, SchemaVersionError, ShapeError
from mascots.models import BlackBox, Surrogate, blackbox_from_dict, knn1_fit, ridge_borf_fit, surrogate_fidelity, surrogate_fit

FORMAT_VERSION = 1
BLACKBOXES = ("knn1", "ridge-borf")


@dataclass(eq=False)
class FittedModel:
    blackbox: BlackBox
    transform: BorfTransform
    surrogate: Surrogate
    train: Dataset
    fidelity: float
    config: dict = field(default_factory=dict)

    @property
    def class_names(self) -> tuple[str, ...]:
        return self.train.class_names

    def explain(self, series, lambda_: float = 0.1, max_iterations: int = 20, seed: int = 0) -> CounterfactualResult:
        return explain(series, self.blackbox, self.surrogate, self.transform, EngineConfig(lambda_, max_iterations, seed))

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "model",
            "class_names": list(self.class_names),
            "channels": self.train.channels,
            "length": self.train.length,
            "transform": self.transform.to_dict(),
            "surrogate": self.surrogate.to_dict(),
            "blackbox": self.blackbox.to_dict(),
            "fidelity": self.fidelity,
            "train": dataset_to_dict(self.train),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> FittedModel:
        if doc.get("kind") != "model" or doc.get("format_version") != FORMAT_VERSION:
            raise SchemaVersionError(
                f"not a version {FORMAT_VERSION} model bundle "
                f"(kind={doc.get('kind')!r}, format_version={doc.get('format_version')!r})"
            )
        return cls(
            blackbox=blackbox_from_dict(doc["blackbox"]),
            transform=BorfTransform.from_dict(doc["transform"]),
            surrogate=Surrogate.from_dict(doc["surrogate"]),
            train=dataset_from_dict(doc["train"]),
            fidelity=doc["fidelity"],
            config=doc.get("config", {}),
        )


def fit_model(
    train: Dataset,
    blackbox: str = "knn1",
    ridge: float = 1.0,
    epochs: int = 2000,
    learning_rate: float | None = None,
    seed: int = 0,
) -> FittedModel:
    """Fit the black-box on the labels, then the surrogate on the black-box's probabilities."""
    if train.n_classes < 2:
        raise ShapeError(f"training data has {train.n_classes} class; at least two are needed")
    transform = BorfTransform.auto(train.channels, train.length)
    if blackbox == "knn1":
        b = knn1_fit(train)
    elif blackbox == "ridge-borf":
        b = ridge_borf_fit(train, transform, ridge)
    else:
        raise ParseError(f"unknown black-box {blackbox!r}; choose from {BLACKBOXES}")
    Z = dense_counts(train, transform)
    targets = b.predict_proba_batch(train.values)
    g = surrogate_fit(Z, targets, epochs=epochs, learning_rate=learning_rate, seed=seed)
    fidelity = surrogate_fidelity(g, Z, np.argmax(targets, axis=1))
    return FittedModel(b, transform, g, train, fidelity)


def save_model(model: FittedModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()))


def load_model(path) -> FittedModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read model {path}: {exc}") from exc
    return FittedModel.from_dict(doc)


def check_compatible(model: FittedModel, data: Dataset) -> None:
    if (data.channels, data.length) != (model.train.channels, model.train.length):
        raise ShapeError(
            f"data shape (d={data.channels}, m={data.length}) does not match the model's "
            f"(d={model.train.channels}, m={model.train.length})"
        )
