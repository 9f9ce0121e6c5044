"""Counterfactual quality measures and an isolation forest for plausibility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mascots.dataset_io import Dataset, TimeSeries
from mascots.errors import EmptyDataset, LengthMismatch, ShapeError

EULER_GAMMA = 0.5772156649015329


def _stack(series) -> np.ndarray:
    if isinstance(series, Dataset):
        return series.values
    if isinstance(series, np.ndarray):
        arr = np.asarray(series, dtype=np.float64)
    else:
        arr = np.array([getattr(s, "values", s) for s in series], dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, None, :]
    if arr.ndim != 3:
        raise ShapeError(f"expected a (n, d, m) collection, got shape {arr.shape}")
    return arr


def _pair(originals, counterfactuals) -> tuple[np.ndarray, np.ndarray]:
    X, Xc = _stack(originals), _stack(counterfactuals)
    if len(X) != len(Xc):
        raise LengthMismatch(f"{len(X)} originals vs {len(Xc)} counterfactuals")
    if len(X) == 0:
        raise EmptyDataset("no instances to score")
    if X.shape != Xc.shape:
        raise ShapeError(f"original shape {X.shape} vs counterfactual shape {Xc.shape}")
    return X, Xc


def validity(originals, counterfactuals, f) -> float:
    """Fraction of pairs on which the classifier's prediction changes."""
    X, Xc = _pair(originals, counterfactuals)
    return float(np.mean(f.predict_batch(X) != f.predict_batch(Xc)))


def proximity(originals, counterfactuals) -> float:
    """Sum of Euclidean distances divided by n * d * m."""
    X, Xc = _pair(originals, counterfactuals)
    n, d, m = X.shape
    return float(np.linalg.norm((X - Xc).reshape(n, -1), axis=1).sum() / (n * d * m))


def sparsity(originals, counterfactuals) -> float:
    """Fraction of values left exactly unchanged."""
    X, Xc = _pair(originals, counterfactuals)
    return float(np.mean((X - Xc) == 0))


def average_path_length(n: int | np.ndarray) -> np.ndarray:
    """Expected path length of an unsuccessful BST search among ``n`` points."""
    n = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(n)
    big = n > 2
    out[big] = 2.0 * (np.log(n[big] - 1.0) + EULER_GAMMA) - 2.0 * (n[big] - 1.0) / n[big]
    out[n == 2] = 1.0
    return out


@dataclass(eq=False)
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray  # sample count at leaves, -1 at internal nodes

    def path_length(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        depth = np.zeros(len(X))
        active = self.size[node] < 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] < self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            depth[idx] += 1
            active = self.size[node] < 0
        return depth + average_path_length(self.size[node])


def _grow(X: np.ndarray, max_depth: int, rng: np.random.Generator) -> _Tree:
    feature, threshold, left, right, size = [], [], [], [], []

    def new_node():
        feature.append(0)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(-1)
        return len(size) - 1

    stack = [(new_node(), np.arange(len(X)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if len(rows) <= 1 or depth >= max_depth:
            size[node] = len(rows)
            continue
        sub = X[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        varying = np.flatnonzero(hi > lo)
        if varying.size == 0:
            size[node] = len(rows)
            continue
        q = int(varying[rng.integers(varying.size)])
        split = rng.uniform(lo[q], hi[q])
        mask = sub[:, q] < split
        feature[node], threshold[node] = q, split
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], rows[~mask], depth + 1))
        stack.append((left[node], rows[mask], depth + 1))
    return _Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(size, dtype=np.int64),
    )


@dataclass(eq=False)
class IsolationForest:
    trees: list[_Tree]
    subsample: int
    tree_count: int
    seed: int
    threshold: float = 0.5
    n_features: int = field(default=0)

    def score(self, X) -> np.ndarray:
        """Anomaly score ``2 ** (-E[h(x)] / c(psi))`` of each row (or series)."""
        X = np.asarray(getattr(X, "values", X), dtype=np.float64)
        if X.ndim == 1:
            X = X[None]
        X = X.reshape(len(X), -1)
        if X.shape[1] != self.n_features:
            raise ShapeError(f"{X.shape[1]} features, forest was fitted on {self.n_features}")
        depth = np.mean([t.path_length(X) for t in self.trees], axis=0)
        return 2.0 ** (-depth / average_path_length(self.subsample))

    def is_nominal(self, X, threshold: float | None = None) -> np.ndarray:
        return self.score(X) < (self.threshold if threshold is None else threshold)


def iforest_fit(train, tree_count: int = 100, subsample: int = 256, seed: int = 0, threshold: float = 0.5) -> IsolationForest:
    """Fit on flattened series (rows of ``train``).

    Rows are put in lexicographic order before subsampling and each tree draws
    from its own generator seeded by ``(seed, tree index)``, so the forest does
    not depend on the order of the training rows.
    """
    X = _stack(train) if not (isinstance(train, np.ndarray) and train.ndim == 2) else np.asarray(train, dtype=np.float64)
    X = X.reshape(len(X), -1)
    if len(X) < 2:
        raise EmptyDataset("isolation forest needs at least two training rows")
    X = X[np.lexsort(X.T[::-1])]
    psi = min(int(subsample), len(X))
    max_depth = int(math.ceil(math.log2(psi)))
    trees = []
    for t in range(int(tree_count)):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), t]))
        rows = rng.choice(len(X), size=psi, replace=False)
        trees.append(_grow(X[np.sort(rows)], max_depth, rng))
    return IsolationForest(trees, psi, int(tree_count), int(seed), threshold, X.shape[1])


def plausibility(counterfactuals, forest: IsolationForest, threshold: float | None = None) -> float:
    """Fraction of counterfactuals the forest scores below its anomaly threshold."""
    Xc = _stack(counterfactuals)
    if len(Xc) == 0:
        raise EmptyDataset("no counterfactuals to score")
    return float(np.mean(forest.is_nominal(Xc.reshape(len(Xc), -1), threshold)))


METRICS = ("validity", "proximity", "sparsity", "plausibility", "iterations")


@dataclass
class MetricsReport:
    validity: float
    proximity: float
    sparsity: float
    plausibility: float
    mean_iterations: float
    median_iterations: float
    std: dict[str, float]
    per_instance: list[dict]

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": "metrics",
            "n": len(self.per_instance),
            "validity": self.validity,
            "proximity": self.proximity,
            "sparsity": self.sparsity,
            "plausibility": self.plausibility,
            "mean_iterations": self.mean_iterations,
            "median_iterations": self.median_iterations,
            "std": dict(self.std),
            "per_instance": list(self.per_instance),
        }

    def to_table(self) -> str:
        rows = [
            ("validity", self.validity, self.std["validity"]),
            ("proximity", self.proximity, self.std["proximity"]),
            ("sparsity", self.sparsity, self.std["sparsity"]),
            ("plausibility", self.plausibility, self.std["plausibility"]),
            ("# iter.", self.mean_iterations, self.std["iterations"]),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"{'measure':<{width}}  {'mean':>8}  {'std':>8}"]
        lines += [f"{name:<{width}}  {mean:>8.4f}  {sd:>8.4f}" for name, mean, sd in rows]
        return "\n".join(lines)


def evaluate_run(results: Sequence, b, forest: IsolationForest) -> MetricsReport:
    """Aggregate validity, proximity, sparsity, plausibility and iteration counts.

    Invalid counterfactuals are scored like valid ones; validity is re-checked
    with ``b`` rather than read from the results.
    """
    if not results:
        raise EmptyDataset("no explanations to evaluate")
    X = _stack([r.original for r in results])
    Xc = _stack([r.counterfactual for r in results])
    n, d, m = X.shape
    diff = (X - Xc).reshape(n, -1)
    flipped = b.predict_batch(X) != b.predict_batch(Xc)
    prox = np.linalg.norm(diff, axis=1) / (d * m)
    sparse = np.mean(diff == 0, axis=1)
    nominal = forest.is_nominal(Xc.reshape(n, -1))
    iters = np.array([r.iterations for r in results], dtype=np.float64)
    per_instance = [
        {
            "id": r.original.id,
            "validity": bool(flipped[i]),
            "proximity": float(prox[i]),
            "sparsity": float(sparse[i]),
            "plausibility": bool(nominal[i]),
            "iterations": int(iters[i]),
        }
        for i, r in enumerate(results)
    ]
    columns = {
        "validity": flipped.astype(float),
        "proximity": prox,
        "sparsity": sparse,
        "plausibility": nominal.astype(float),
        "iterations": iters,
    }
    return MetricsReport(
        validity=float(flipped.mean()),
        proximity=float(prox.mean()),
        sparsity=float(sparse.mean()),
        plausibility=float(nominal.mean()),
        mean_iterations=float(iters.mean()),
        median_iterations=float(np.median(iters)),
        std={k: float(v.std()) for k, v in columns.items()},
        per_instance=per_instance,
    )
