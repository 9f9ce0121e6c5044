"""Time-series datasets: containers, parsers, persistence and splitting."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from mascots.errors import EmptyDataset, ParseError, SchemaVersionError, ShapeError

FORMAT_VERSION = 1


class SplitWarning(UserWarning):
    """Raised when a requested stratified split has to fall back to a plain one."""


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A single d x m series."""

    values: np.ndarray
    id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"time series must be a non-empty d x m matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParseError("time series contains NaN or infinite values")
        object.__setattr__(self, "values", _frozen_array(arr, np.float64))

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class Dataset:
    """n labelled series sharing one (d, m) shape.

    ``values`` is stored as a read-only ``(n, d, m)`` array; :attr:`instances`
    yields the rows as :class:`TimeSeries`.
    """

    values: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 2:
            values = values[:, None, :]
        if values.ndim != 3:
            raise ShapeError(f"dataset values must have shape (n, d, m), got {values.shape}")
        n = values.shape[0]
        if n == 0:
            raise EmptyDataset("dataset has no instances")
        if values.shape[1] < 1 or values.shape[2] < 1:
            raise ShapeError(f"dataset series must be non-empty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ParseError("dataset contains NaN or infinite values")
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != n:
            raise ShapeError(f"{labels.shape[0]} labels for {n} instances")
        names = tuple(str(c) for c in self.class_names)
        if not names:
            raise ShapeError("dataset has no class names")
        if labels.min() < 0 or labels.max() >= len(names):
            raise ShapeError("label index outside the class list")
        ids = tuple(str(i) for i in self.ids) or tuple(str(i) for i in range(n))
        if len(ids) != n:
            raise ShapeError(f"{len(ids)} ids for {n} instances")
        object.__setattr__(self, "values", _frozen_array(values, np.float64))
        object.__setattr__(self, "labels", _frozen_array(labels, np.int64))
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> TimeSeries:
        return TimeSeries(self.values[i], self.ids[i])

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def length(self) -> int:
        return self.values.shape[2]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def instances(self) -> Iterator[TimeSeries]:
        for i in range(self.n):
            yield self[i]

    def subset(self, index: Sequence[int]) -> Dataset:
        index = np.asarray(index, dtype=np.int64)
        if index.size == 0:
            raise EmptyDataset("subset selects no instances")
        return Dataset(
            self.values[index],
            self.labels[index],
            self.class_names,
            tuple(self.ids[i] for i in index),
        )


class _LabelMap:
    """Assigns contiguous indices to labels in first-seen order."""

    def __init__(self, names: Sequence[str] | None = None, frozen: bool = False):
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        self.frozen = frozen
        for name in names or ():
            self._add(name)

    def _add(self, name: str) -> int:
        self.index[name] = len(self.names)
        self.names.append(name)
        return self.index[name]

    def __call__(self, name: str, where: str) -> int:
        if name in self.index:
            return self.index[name]
        if self.frozen:
            raise ParseError(f"{where}: label {name!r} not among declared classes {self.names}")
        return self._add(name)


def _parse_float(token: str, where: str) -> float:
    token = token.strip()
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{where}: {token!r} is not a number") from None
    if not math.isfinite(value):
        raise ParseError(f"{where}: missing or non-finite value {token!r}")
    return value


def load_ts(path, class_names: Sequence[str] | None = None) -> Dataset:
    """Read a ``.ts`` archive file (sktime text format).

    Labels map to indices in the order of the ``@classLabel`` declaration when
    present, else in order of first appearance. Pass ``class_names`` to reuse
    a mapping, e.g. the training file's when loading the test file.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc

    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    has_data_tag = any(ln.lower() == "@data" for ln in lines)
    declared: list[str] | None = None
    dimension = None
    in_data = not has_data_tag
    rows: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines, 1):
        if line.startswith("@"):
            if in_data and has_data_tag:
                raise ParseError(f"{path}:{lineno}: header line after @data")
            parts = line.split()
            tag = parts[0].lower()
            if tag == "@data":
                in_data = True
            elif tag == "@classlabel":
                if len(parts) < 2 or parts[1].lower() not in ("true", "false"):
                    raise ParseError(f"{path}:{lineno}: malformed @classLabel")
                if parts[1].lower() == "false":
                    raise ParseError(f"{path}: unlabelled files are not supported")
                declared = parts[2:] or None
            elif tag in ("@dimension", "@dimensions"):
                try:
                    dimension = int(parts[1])
                except (IndexError, ValueError):
                    raise ParseError(f"{path}:{lineno}: malformed {parts[0]}") from None
            elif tag == "@univariate":
                if len(parts) > 1 and parts[1].lower() == "true":
                    dimension = 1
            # remaining tags (@problemName, @timestamps, @equalLength ...) are informational
            continue
        if not in_data:
            raise ParseError(f"{path}:{lineno}: data row before @data")
        rows.append((lineno, line))

    if not rows:
        raise EmptyDataset(f"{path}: no data rows")

    if class_names is not None:
        labels_map = _LabelMap(class_names, frozen=True)
    else:
        labels_map = _LabelMap(declared, frozen=declared is not None)

    series, labels = [], []
    for lineno, line in rows:
        where = f"{path}:{lineno}"
        fields = line.split(":")
        if len(fields) < 2:
            raise ParseError(f"{where}: expected channels and a label separated by ':'")
        label = fields[-1].strip()
        if not label:
            raise ParseError(f"{where}: empty class label")
        channels = []
        for chunk in fields[:-1]:
            if not chunk.strip():
                raise ParseError(f"{where}: empty channel")
            channels.append([_parse_float(tok, where) for tok in chunk.split(",")])
        if len({len(c) for c in channels}) != 1:
            raise ShapeError(f"{where}: channels have different lengths {[len(c) for c in channels]}")
        if dimension is not None and len(channels) != dimension:
            raise ShapeError(f"{where}: {len(channels)} channels, header declares {dimension}")
        series.append(channels)
        labels.append(labels_map(label, where))

    shapes = {(len(s), len(s[0])) for s in series}
    if len(shapes) != 1:
        raise ShapeError(f"{path}: instances have different shapes {sorted(shapes)}")
    ids = tuple(f"{path.stem}:{i}" for i in range(len(series)))
    return Dataset(np.array(series), labels, labels_map.names, ids)


def load_csv(path, channels: int = 1, class_names: Sequence[str] | None = None) -> Dataset:
    """Read a wide CSV: ``channels * m`` value columns followed by a label column."""
    path = Path(path)
    if channels < 1:
        raise ShapeError("channels must be positive")
    try:
        with path.open(newline="") as fh:
            raw = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not raw:
        raise EmptyDataset(f"{path}: no rows")

    labels_map = _LabelMap(class_names, frozen=class_names is not None)
    width = len(raw[0])
    series, labels = [], []
    for lineno, row in enumerate(raw, 1):
        where = f"{path}:{lineno}"
        if len(row) != width:
            raise ShapeError(f"{where}: {len(row)} columns, expected {width}")
        n_values = len(row) - 1
        if n_values < channels or n_values % channels:
            raise ShapeError(f"{where}: {n_values} value columns do not split into {channels} channels")
        values = [_parse_float(tok, where) for tok in row[:-1]]
        series.append(np.reshape(values, (channels, n_values // channels)))
        labels.append(labels_map(row[-1].strip(), where))
    ids = tuple(f"{path.stem}:{i}" for i in range(len(series)))
    return Dataset(np.array(series), labels, labels_map.names, ids)


def dataset_to_dict(data: Dataset) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "dataset",
        "class_names": list(data.class_names),
        "ids": list(data.ids),
        "labels": data.labels.tolist(),
        "values": data.values.tolist(),
    }


def dataset_from_dict(doc: dict) -> Dataset:
    if doc.get("format_version") != FORMAT_VERSION:
        raise SchemaVersionError(f"unsupported dataset format_version {doc.get('format_version')!r}")
    try:
        return Dataset(np.array(doc["values"], dtype=np.float64), doc["labels"], doc["class_names"], doc["ids"])
    except KeyError as exc:
        raise ParseError(f"dataset document missing field {exc}") from None


def save_json(data: Dataset, path) -> None:
    # json writes floats with repr(), which round-trips binary64 exactly
    Path(path).write_text(json.dumps(dataset_to_dict(data)))


def load_json(path) -> Dataset:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return dataset_from_dict(doc)


def load_dataset(path, channels: int = 1, class_names: Sequence[str] | None = None) -> Dataset:
    """Dispatch on file extension: ``.ts``, ``.csv`` or ``.json``."""
    suffix = Path(path).suffix.lower()
    if suffix == ".ts":
        return load_ts(path, class_names)
    if suffix == ".csv":
        return load_csv(path, channels, class_names)
    if suffix == ".json":
        return load_json(path)
    raise ParseError(f"unrecognised dataset extension {suffix!r} for {path}")


def save_dataset(data: Dataset, path) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        save_json(data, path)
    elif suffix == ".ts":
        save_ts(data, path)
    elif suffix == ".csv":
        save_csv(data, path)
    else:
        raise ParseError(f"unrecognised dataset extension {suffix!r} for {path}")


def save_ts(data: Dataset, path, problem_name: str | None = None) -> None:
    path = Path(path)
    out = [
        f"@problemName {problem_name or path.stem}",
        "@timeStamps false",
        "@missing false",
        f"@univariate {'true' if data.channels == 1 else 'false'}",
        f"@dimensions {data.channels}",
        "@equalLength true",
        f"@seriesLength {data.length}",
        "@classLabel true " + " ".join(data.class_names),
        "@data",
    ]
    for x, y in zip(data.values, data.labels):
        chans = ":".join(",".join(repr(float(v)) for v in ch) for ch in x)
        out.append(f"{chans}:{data.class_names[y]}")
    path.write_text("\n".join(out) + "\n")


def save_csv(data: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for x, y in zip(data.values, data.labels):
            writer.writerow([repr(float(v)) for v in x.ravel()] + [data.class_names[y]])


def znormalize(data: Dataset) -> Dataset:
    """Standardize every channel of every series over its whole length."""
    mu = data.values.mean(axis=2, keepdims=True)
    sd = data.values.std(axis=2, keepdims=True)
    sd = np.where(sd < 1e-8, 1.0, sd)
    return Dataset((data.values - mu) / sd, data.labels, data.class_names, data.ids)


def train_test_split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic split, stratified when every class has at least two members.

    Falls back to an unstratified split with a :class:`SplitWarning` otherwise.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = data.n
    if n < 2:
        raise EmptyDataset("cannot split fewer than two instances: one side would be empty")
    n_test = min(max(int(math.floor(n * test_fraction + 0.5)), 1), n - 1)
    rng = np.random.default_rng(seed)
    counts = np.bincount(data.labels, minlength=data.n_classes)
    present = np.flatnonzero(counts)

    if np.all(counts[present] >= 2):
        # largest-remainder allocation of n_test across classes; ties go to the lower class index
        exact = counts[present] * (n_test / n)
        alloc = np.floor(exact).astype(np.int64)
        alloc = np.minimum(np.maximum(alloc, 0), counts[present] - 1)
        order = sorted(range(len(present)), key=lambda i: (-(exact[i] - alloc[i]), i))
        short = n_test - int(alloc.sum())
        for i in order:
            if short <= 0:
                break
            if alloc[i] < counts[present[i]] - 1:
                alloc[i] += 1
                short -= 1
        test_idx = []
        for cls, k in zip(present, alloc):
            members = np.flatnonzero(data.labels == cls)
            test_idx.extend(rng.permutation(members)[:k].tolist())
        test_idx = np.sort(np.array(test_idx, dtype=np.int64))
    else:
        warnings.warn("some class has fewer than two members; split is not stratified", SplitWarning, stacklevel=2)
        test_idx = np.sort(rng.permutation(n)[:n_test])

    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    return data.subset(np.flatnonzero(~mask)), data.subset(np.flatnonzero(mask))
