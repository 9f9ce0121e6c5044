"""Counterfactual search by attribution-guided SAX pattern swaps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from mascots.borf import BorfTransform, BorfVector, transform_one
from mascots.dataset_io import TimeSeries
from mascots.errors import (
    EmptyTrace,
    NoContainedPattern,
    NoSwapAvailable,
    OutOfBounds,
    SchemaVersionError,
    ShapeError,
)
from mascots.models import AttributionMatrix, BlackBox, Surrogate, attribute
from mascots.symbolic import Breakpoints, SaxConfig, Word, window_stats

FORMAT_VERSION = 1
SYMBOL_NAMES = {3: ("low", "medium", "high")}


@dataclass(frozen=True)
class EngineConfig:
    lambda_: float = 0.1
    max_iterations: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.lambda_ < 0:
            raise ValueError("lambda must be non-negative")


@dataclass(frozen=True, eq=False)
class SwapRecord:
    iteration: int
    config_id: int
    k_plus: int
    p_plus: Word
    k_minus: int
    p_minus: Word
    channel: int
    start: int
    delta: np.ndarray
    objective_value: float
    span: int
    alphabet: int

    @property
    def end(self) -> int:
        """Last index touched by the swap (inclusive)."""
        return self.start + self.span - 1

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "config_id": self.config_id,
            "k_plus": self.k_plus,
            "p_plus": list(self.p_plus.symbols),
            "k_minus": self.k_minus,
            "p_minus": list(self.p_minus.symbols),
            "channel": self.channel,
            "start": self.start,
            "end": self.end,
            "span": self.span,
            "alphabet": self.alphabet,
            "delta": self.delta.tolist(),
            "objective_value": self.objective_value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> SwapRecord:
        return cls(
            iteration=doc["iteration"],
            config_id=doc["config_id"],
            k_plus=doc["k_plus"],
            p_plus=Word(doc["p_plus"], doc["config_id"]),
            k_minus=doc["k_minus"],
            p_minus=Word(doc["p_minus"], doc["config_id"]),
            channel=doc["channel"],
            start=doc["start"],
            delta=np.array(doc["delta"], dtype=np.float64),
            objective_value=doc["objective_value"],
            span=doc["span"],
            alphabet=doc["alphabet"],
        )


@dataclass(eq=False)
class CounterfactualResult:
    original: TimeSeries
    counterfactual: TimeSeries
    original_class: int
    final_class: int
    trace: list[SwapRecord]
    seed: int
    lambda_: float = 0.0
    max_iterations: int = 20
    error: str | None = None

    @property
    def valid(self) -> bool:
        return self.final_class != self.original_class

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "explanation",
            "id": self.original.id,
            "original": self.original.values.tolist(),
            "counterfactual": self.counterfactual.values.tolist(),
            "original_class": self.original_class,
            "final_class": self.final_class,
            "valid": self.valid,
            "iterations": self.iterations,
            "seed": self.seed,
            "lambda": self.lambda_,
            "max_iterations": self.max_iterations,
            "error": self.error,
            "trace": [r.to_dict() for r in self.trace],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> CounterfactualResult:
        if doc.get("format_version") != FORMAT_VERSION or doc.get("kind") != "explanation":
            raise SchemaVersionError(
                f"not a version {FORMAT_VERSION} explanation document "
                f"(kind={doc.get('kind')!r}, format_version={doc.get('format_version')!r})"
            )
        return cls(
            original=TimeSeries(np.array(doc["original"]), doc.get("id", "")),
            counterfactual=TimeSeries(np.array(doc["counterfactual"]), doc.get("id", "")),
            original_class=doc["original_class"],
            final_class=doc["final_class"],
            trace=[SwapRecord.from_dict(r) for r in doc["trace"]],
            seed=doc["seed"],
            lambda_=doc["lambda"],
            max_iterations=doc["max_iterations"],
            error=doc.get("error"),
        )

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> CounterfactualResult:
        return cls.from_dict(json.loads(text))


def _window_index(config: SaxConfig, start: int) -> np.ndarray:
    return start + np.arange(config.window) * config.dilation


def pattern_swap(
    X,
    channel: int,
    start: int,
    p_plus: Word,
    p_minus: Word,
    config: SaxConfig,
    breakpoints: Breakpoints,
) -> np.ndarray:
    """Additive change to one window that moves each mismatching PAA segment to the centre of its target bin.

    The shift is computed in the window's own standardized units and scaled
    back by its standard deviation, so re-encoding the perturbed window with
    the original mean and deviation gives ``p_minus`` exactly.
    """
    values = np.asarray(getattr(X, "values", X), dtype=np.float64)
    if values.ndim == 1:
        values = values[None]
    if not 0 <= channel < values.shape[0] or start < 0 or start + config.span > values.shape[1]:
        raise OutOfBounds(f"window at channel {channel}, start {start}, span {config.span} leaves the series")
    stats = window_stats(values[channel, _window_index(config, start)], config)
    plus = np.asarray(p_plus.symbols)
    minus = np.asarray(p_minus.symbols)
    shift = np.where(minus != plus, (breakpoints.centers[minus] - stats.paa) * stats.std, 0.0)
    return np.repeat(shift, config.segment)


def get_perturbation(
    X,
    y_hat: int,
    z: BorfVector,
    phi: AttributionMatrix | np.ndarray,
    lambda_: float,
    transform: BorfTransform,
    vocab_presence: np.ndarray | None,
    rng: np.random.Generator,
    iteration: int = 0,
) -> tuple[np.ndarray, SwapRecord]:
    values = np.asarray(getattr(X, "values", X), dtype=np.float64)
    phi = phi.phi if isinstance(phi, AttributionMatrix) else np.asarray(phi)
    scores = phi[:, y_hat]

    contained = z.contained()
    if not contained:
        raise NoContainedPattern("the series contains no pattern")
    k_plus = contained[int(np.argmax(scores[contained]))]

    channel, _ = transform.split_index(k_plus)
    config = transform.config_of(k_plus)
    p_plus = transform.word(k_plus)

    pool = np.array([k for k in transform.config_range(channel, config.config_id) if k != k_plus])
    if vocab_presence is not None and pool.size:
        pool = pool[np.asarray(vocab_presence, dtype=bool)[pool]]
    if pool.size == 0:
        raise NoSwapAvailable(f"no training pattern of config {config.config_id} can replace {p_plus}")
    plus = np.asarray(p_plus.symbols)
    l1 = np.array([np.abs(plus - np.asarray(transform.word(k).symbols)).sum() for k in pool])
    objective = scores[pool] + lambda_ * l1
    best = int(np.argmin(objective))  # pool is ascending, so ties keep the lowest index
    k_minus = int(pool[best])
    p_minus = transform.word(k_minus)

    alignments = z.occurrences[k_plus]
    j, t = alignments[int(rng.integers(len(alignments)))]
    delta = pattern_swap(values, j, t, p_plus, p_minus, config, transform.breakpoints[config.alphabet])
    Delta = np.zeros_like(values)
    Delta[j, _window_index(config, t)] = delta
    record = SwapRecord(
        iteration=iteration,
        config_id=config.config_id,
        k_plus=int(k_plus),
        p_plus=p_plus,
        k_minus=k_minus,
        p_minus=p_minus,
        channel=int(j),
        start=int(t),
        delta=delta,
        objective_value=float(objective[best]),
        span=config.span,
        alphabet=config.alphabet,
    )
    return Delta, record


def explain(
    X,
    b: BlackBox,
    g: Surrogate,
    transform: BorfTransform,
    cfg: EngineConfig = EngineConfig(),
    attribution: Callable[[Surrogate, BorfVector], AttributionMatrix] = attribute,
) -> CounterfactualResult:
    """Swap patterns until the black-box changes its mind or the iteration budget runs out."""
    series = X if isinstance(X, TimeSeries) else TimeSeries(X)
    if series.channels != transform.channels:
        raise ShapeError(f"series has {series.channels} channels, transform expects {transform.channels}")
    if g.n_features != transform.vocab_size:
        raise ShapeError("surrogate was not trained on this transform")
    transform.check_length(series.length)

    rng = np.random.default_rng(cfg.seed)
    presence = g.present()
    current = np.array(series.values, dtype=np.float64)
    y_hat = b.predict(current)
    label = y_hat
    trace: list[SwapRecord] = []
    error = None
    while label == y_hat and len(trace) < cfg.max_iterations:
        z = transform_one(current, transform)
        phi = attribution(g, z)
        try:
            _, record = get_perturbation(
                current, y_hat, z, phi, cfg.lambda_, transform, presence, rng, iteration=len(trace) + 1
            )
        except (NoSwapAvailable, NoContainedPattern) as exc:
            error = f"{type(exc).__name__}: {exc}"
            break
        # only the swapped window is written so every other value stays bit-identical
        config = transform.configs[record.config_id]
        current[record.channel, _window_index(config, record.start)] += record.delta
        trace.append(record)
        label = b.predict(current)

    return CounterfactualResult(
        original=series,
        counterfactual=TimeSeries(current, series.id),
        original_class=int(y_hat),
        final_class=int(label),
        trace=trace,
        seed=cfg.seed,
        lambda_=cfg.lambda_,
        max_iterations=cfg.max_iterations,
        error=error,
    )


def _symbols(word: Word, alphabet: int, verbalize: bool) -> str:
    names = SYMBOL_NAMES.get(alphabet) if verbalize else None
    if names is None:
        return "[" + ",".join(str(s) for s in word.symbols) + "]"
    return "[" + ", ".join(names[s] for s in word.symbols) + "]"


def _where(record: SwapRecord, multichannel: bool) -> str:
    where = f"indexes {record.start}–{record.end}"
    return f"channel {record.channel}, {where}" if multichannel else where


def render_text(result: CounterfactualResult, class_names: Sequence[str] | None = None, verbalize: bool = False) -> str:
    """Natural-language account of the swaps, e.g.

    ``To change the prediction of the black-box model from class abnormal to
    class normal, the pattern in indexes 10–25 must be replaced with
    [2,2,1,0].``
    """
    if not result.trace:
        raise EmptyTrace("the explanation has no swaps to describe")

    def name(c):
        return class_names[c] if class_names is not None and c < len(class_names) else str(c)

    multi = result.original.channels > 1
    first, rest = result.trace[0], result.trace[1:]
    clauses = [
        f"the pattern in {_where(first, multi)} must be replaced with {_symbols(first.p_minus, first.alphabet, verbalize)}"
    ]
    for r in rest:
        clauses.append(
            f"followed by replacing the pattern in {_where(r, multi)} with {_symbols(r.p_minus, r.alphabet, verbalize)}"
        )
    body = ", ".join(clauses)
    if result.valid:
        return (
            f"To change the prediction of the black-box model from class {name(result.original_class)} "
            f"to class {name(result.final_class)}, {body}."
        )
    return (
        f"No counterfactual was found within {result.iterations} iteration(s): starting from class "
        f"{name(result.original_class)}, {body}, but the prediction did not change."
    )


PLOT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "mascots plot document",
    "type": "object",
    "required": [
        "format_version",
        "kind",
        "channels",
        "length",
        "original",
        "counterfactual",
        "valid",
        "original_class",
        "final_class",
        "spans",
        "metrics",
    ],
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "kind": {"const": "plot"},
        "channels": {"type": "integer", "minimum": 1},
        "length": {"type": "integer", "minimum": 1},
        "original": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "counterfactual": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "valid": {"type": "boolean"},
        "original_class": {"type": "integer"},
        "final_class": {"type": "integer"},
        "spans": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["iteration", "channel", "start", "end", "p_plus", "p_minus"],
                "properties": {
                    "iteration": {"type": "integer"},
                    "channel": {"type": "integer"},
                    "start": {"type": "integer"},
                    "end": {"type": "integer"},
                    "p_plus": {"type": "array", "items": {"type": "integer"}},
                    "p_minus": {"type": "array", "items": {"type": "integer"}},
                },
            },
        },
        "metrics": {
            "type": "object",
            "required": ["proximity", "sparsity", "iterations"],
            "properties": {
                "proximity": {"type": "number", "minimum": 0},
                "sparsity": {"type": "number", "minimum": 0, "maximum": 1},
                "iterations": {"type": "integer", "minimum": 0},
            },
        },
    },
}


def render_plot_json(result: CounterfactualResult) -> dict:
    """Overlay data: both series, the span of each swap and per-instance metrics."""
    x = result.original.values
    x_cf = result.counterfactual.values
    diff = x - x_cf
    return {
        "format_version": FORMAT_VERSION,
        "kind": "plot",
        "id": result.original.id,
        "channels": x.shape[0],
        "length": x.shape[1],
        "original": x.tolist(),
        "counterfactual": x_cf.tolist(),
        "valid": result.valid,
        "original_class": result.original_class,
        "final_class": result.final_class,
        "spans": [
            {
                "iteration": r.iteration,
                "channel": r.channel,
                "start": r.start,
                "end": r.end,
                "p_plus": list(r.p_plus.symbols),
                "p_minus": list(r.p_minus.symbols),
            }
            for r in result.trace
        ],
        "metrics": {
            "proximity": float(np.linalg.norm(diff) / diff.size),
            "sparsity": float(np.mean(diff == 0)),
            "iterations": result.iterations,
        },
    }
