"""Black-box classifiers, the BoRF surrogate and its exact linear attribution."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from mascots.borf import BorfMatrix, BorfTransform, BorfVector, dense_counts, matrix_from
from mascots.dataset_io import Dataset, TimeSeries
from mascots.errors import EmptyDataset, NonFiniteLoss, ParseError, ShapeError

KNN_EPSILON = 0.05


def softmax(margins: np.ndarray) -> np.ndarray:
    shifted = margins - margins.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _as_batch(X) -> np.ndarray:
    if isinstance(X, Dataset):
        return X.values
    if isinstance(X, TimeSeries):
        return X.values[None]
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ShapeError(f"expected a (n, d, m) batch, got shape {arr.shape}")
    return arr


class BlackBox(ABC):
    """Classifier seen only through its class probabilities.

    ``predict`` is the argmax of ``predict_proba`` with ties resolved to the
    lowest class index.
    """

    kind: str = ""
    n_classes: int
    shape: tuple[int, int]

    @abstractmethod
    def predict_proba_batch(self, X: np.ndarray) -> np.ndarray:
        """``(n, c)`` probabilities for a ``(n, d, m)`` batch."""

    def _check(self, X) -> np.ndarray:
        batch = _as_batch(X)
        if batch.shape[1:] != tuple(self.shape):
            raise ShapeError(f"series shape {batch.shape[1:]} does not match model shape {tuple(self.shape)}")
        return batch

    def predict_proba(self, series) -> np.ndarray:
        return self.predict_proba_batch(self._check(series))[0]

    def predict(self, series) -> int:
        return int(np.argmax(self.predict_proba(series)))

    def predict_batch(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba_batch(self._check(X)), axis=1)

    @abstractmethod
    def to_dict(self) -> dict: ...


class KNN1(BlackBox):
    """Euclidean 1-nearest-neighbour classifier over the flattened d x m series."""

    kind = "knn1"

    def __init__(self, train_values: np.ndarray, train_labels: np.ndarray, n_classes: int):
        self.train_values = np.asarray(train_values, dtype=np.float64)
        self.train_labels = np.asarray(train_labels, dtype=np.int64)
        self.n_classes = int(n_classes)
        self.shape = self.train_values.shape[1:]
        self._flat = self.train_values.reshape(len(self.train_values), -1)

    def nearest(self, X) -> np.ndarray:
        flat = self._check(X).reshape(-1, self._flat.shape[1])
        dist = ((flat[:, None, :] - self._flat[None, :, :]) ** 2).sum(axis=-1)
        return np.argmin(dist, axis=1)  # first minimum: ties go to the lowest training index

    def predict_proba_batch(self, X) -> np.ndarray:
        labels = self.train_labels[self.nearest(X)]
        c = self.n_classes
        proba = np.full((len(labels), c), KNN_EPSILON / (c - 1))
        proba[np.arange(len(labels)), labels] = 1.0 - KNN_EPSILON
        return proba

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_classes": self.n_classes,
            "train_values": self.train_values.tolist(),
            "train_labels": self.train_labels.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> KNN1:
        return cls(np.array(doc["train_values"]), np.array(doc["train_labels"]), doc["n_classes"])


def knn1_fit(train: Dataset) -> KNN1:
    if train.n == 0:
        raise EmptyDataset("1-NN needs at least one training instance")
    return KNN1(train.values, train.labels, train.n_classes)


def knn1_predict(model: KNN1, series) -> int:
    return model.predict(series)


class RidgeBorf(BlackBox):
    """One-vs-rest ridge regression on standardized BoRF counts."""

    kind = "ridge-borf"

    def __init__(self, transform: BorfTransform, length: int, weights, intercept, means, scales, ridge: float):
        self.transform = transform
        self.weights = np.asarray(weights, dtype=np.float64)
        self.intercept = np.asarray(intercept, dtype=np.float64)
        self.means = np.asarray(means, dtype=np.float64)
        self.scales = np.asarray(scales, dtype=np.float64)
        self.ridge = float(ridge)
        self.n_classes = self.weights.shape[1]
        self.shape = (transform.channels, int(length))

    def margins(self, X) -> np.ndarray:
        Z = dense_counts(self._check(X), self.transform)
        return ((Z - self.means) / self.scales) @ self.weights + self.intercept

    def predict_proba_batch(self, X) -> np.ndarray:
        return softmax(self.margins(X))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "transform": self.transform.to_dict(),
            "length": self.shape[1],
            "weights": self.weights.tolist(),
            "intercept": self.intercept.tolist(),
            "means": self.means.tolist(),
            "scales": self.scales.tolist(),
            "ridge": self.ridge,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> RidgeBorf:
        return cls(
            BorfTransform.from_dict(doc["transform"]),
            doc["length"],
            doc["weights"],
            doc["intercept"],
            doc["means"],
            doc["scales"],
            doc["ridge"],
        )


def ridge_solve(X: np.ndarray, labels: np.ndarray, n_classes: int, ridge: float):
    """Minimize mean squared error to +-1 one-vs-rest targets plus ``ridge * |W|^2``.

    Returns ``(weights, intercept, means, scales)``; constant columns get scale 1
    and therefore standardize to zero.
    """
    n = X.shape[0]
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales = np.where(scales < 1e-12, 1.0, scales)
    Xs = (X - means) / scales
    Y = -np.ones((n, n_classes))
    Y[np.arange(n), labels] = 1.0
    ybar = Y.mean(axis=0)
    gram = Xs.T @ Xs / n + ridge * np.eye(X.shape[1])
    weights = linalg.solve(gram, Xs.T @ (Y - ybar) / n, assume_a="pos")
    return weights, ybar, means, scales


def ridge_borf_fit(train: Dataset, transform: BorfTransform, ridge: float = 1.0) -> RidgeBorf:
    if train.n == 0:
        raise EmptyDataset("ridge black-box needs training instances")
    if not ridge > 0:
        raise ValueError("ridge penalty must be positive")
    Z = dense_counts(train, transform)
    weights, intercept, means, scales = ridge_solve(Z, train.labels, train.n_classes, ridge)
    return RidgeBorf(transform, train.length, weights, intercept, means, scales, ridge)


BLACKBOX_KINDS = {KNN1.kind: KNN1, RidgeBorf.kind: RidgeBorf}


def blackbox_from_dict(doc: dict) -> BlackBox:
    try:
        cls = BLACKBOX_KINDS[doc["kind"]]
    except KeyError:
        raise ParseError(f"unknown black-box kind {doc.get('kind')!r}") from None
    return cls.from_dict(doc)


@dataclass(eq=False)
class Surrogate:
    """Multinomial logistic model on mean-centred BoRF counts."""

    weights: np.ndarray
    bias: np.ndarray
    feature_means: np.ndarray
    loss_history: list[float] = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    def margins(self, Z) -> np.ndarray:
        if isinstance(Z, BorfVector):
            Z = Z.to_dense()
        Z = np.atleast_2d(matrix_from(Z))
        return (Z - self.feature_means) @ self.weights + self.bias

    def predict_proba(self, Z) -> np.ndarray:
        return softmax(self.margins(Z))

    def predict(self, Z) -> np.ndarray:
        return np.argmax(self.margins(Z), axis=1)

    def present(self) -> np.ndarray:
        """Features that occur at least once in the training matrix."""
        return self.feature_means > 0

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "feature_means": self.feature_means.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Surrogate:
        return cls(np.array(doc["weights"], dtype=np.float64), np.array(doc["bias"]), np.array(doc["feature_means"]))


def softmax_cross_entropy(weights, bias, X, targets):
    """Mean cross-entropy of ``softmax(X @ weights + bias)`` against soft targets, and its gradients."""
    n = X.shape[0]
    margins = X @ weights + bias
    shifted = margins - margins.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_norm
    loss = -float((targets * log_p).sum()) / n
    resid = (np.exp(log_p) - targets) / n
    return loss, X.T @ resid, resid.sum(axis=0)


def surrogate_fit(
    Z, targets, epochs: int = 2000, learning_rate: float | None = None, seed: int = 0, precondition: bool = True
) -> Surrogate:
    """Full-batch gradient descent on the soft-target cross-entropy.

    Descent runs on per-column standardized counts (a diagonal preconditioner)
    and the weights are mapped back to raw-count units. With
    ``learning_rate=None`` the step is ``1/L`` for the loss's Lipschitz bound,
    which makes the loss monotone. Weights start at zero and the bias at the
    log class priors of ``targets``, so the fit has no random component;
    ``seed`` is accepted for interface stability.
    """
    Z = matrix_from(Z)
    T = np.asarray(targets, dtype=np.float64)
    if Z.ndim != 2 or T.ndim != 2 or Z.shape[0] != T.shape[0]:
        raise ShapeError(f"count matrix {Z.shape} and targets {T.shape} disagree")
    if Z.shape[0] == 0:
        raise EmptyDataset("surrogate needs training rows")
    if not np.allclose(T.sum(axis=1), 1.0, atol=1e-6):
        raise ShapeError("target rows must sum to 1")

    means = Z.mean(axis=0)
    scales = Z.std(axis=0)
    active = scales > 1e-12
    if precondition:
        inv = np.where(active, 1.0 / np.where(active, scales, 1.0), 0.0)
    else:
        inv = active.astype(np.float64)
    X = (Z - means) * inv

    if learning_rate is None:
        top = np.linalg.norm(X, 2) ** 2 / X.shape[0] if X.size else 0.0
        learning_rate = 1.0 / (0.5 * max(float(top), 1.0))

    priors = np.clip(T.mean(axis=0), 1e-12, None)
    V = np.zeros((Z.shape[1], T.shape[1]))
    b = np.log(priors)
    history = []
    for _ in range(int(epochs)):
        loss, gV, gb = softmax_cross_entropy(V, b, X, T)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} after {len(history)} epochs; lower the learning rate")
        history.append(loss)
        V -= learning_rate * gV
        b -= learning_rate * gb
    loss, _, _ = softmax_cross_entropy(V, b, X, T)
    if not np.isfinite(loss) or not np.all(np.isfinite(V)):
        raise NonFiniteLoss("surrogate weights diverged; lower the learning rate")
    history.append(loss)
    return Surrogate(V * inv[:, None], b, means, history)


def surrogate_fidelity(g: Surrogate, Z, b_labels) -> float:
    """Fraction of rows where the surrogate's argmax equals the black-box label."""
    labels = np.asarray(b_labels).reshape(-1)
    pred = g.predict(Z)
    if pred.shape != labels.shape:
        raise ShapeError(f"{pred.shape[0]} surrogate rows vs {labels.shape[0]} labels")
    return float(np.mean(pred == labels))


@dataclass(eq=False)
class AttributionMatrix:
    phi: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.phi)):
            raise ValueError("attributions must be finite")


def attribute(g: Surrogate, z) -> AttributionMatrix:
    """Exact additive contributions of a linear model about the training mean."""
    dense = z.to_dense() if isinstance(z, BorfVector) else np.asarray(z, dtype=np.float64).reshape(-1)
    if dense.shape[0] != g.n_features:
        raise ShapeError(f"vector has {dense.shape[0]} features, surrogate expects {g.n_features}")
    return AttributionMatrix(g.weights * (dense - g.feature_means)[:, None])


__all__ = [
    "AttributionMatrix",
    "BlackBox",
    "BorfMatrix",
    "KNN1",
    "RidgeBorf",
    "Surrogate",
    "attribute",
    "blackbox_from_dict",
    "knn1_fit",
    "knn1_predict",
    "ridge_borf_fit",
    "softmax",
    "softmax_cross_entropy",
    "surrogate_fidelity",
    "surrogate_fit",
]
