"""Bag-of-Receptive-Fields: multi-configuration SAX word counts per channel."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mascots._backend import encode_windows
from mascots.dataset_io import Dataset, TimeSeries
from mascots.errors import SeriesTooShort, ShapeError, UnknownHash, WindowTooLarge
from mascots.symbolic import FLAT_STD, Breakpoints, SaxConfig, Word, config_offsets, gaussian_breakpoints

MIN_WINDOW = 8


def auto_configure(d: int, m: int) -> list[SaxConfig]:
    """Power-of-two windows from 8 up to m, words of 2 and 4 symbols over an alphabet of 3.

    Stride is ``window / word_length`` and dilation 1, so windows are contiguous.
    The channel count does not change the grid; it is accepted for interface symmetry.
    """
    if d < 1:
        raise ShapeError("channel count must be positive")
    if m < MIN_WINDOW:
        raise SeriesTooShort(f"series of length {m} is shorter than the minimum window {MIN_WINDOW}")
    configs = []
    w = MIN_WINDOW
    while w <= m:
        for l in (2, 4):
            if l <= w:
                configs.append(SaxConfig(w, l, 3, w // l, 1, len(configs)))
        w *= 2
    return configs


@dataclass(frozen=True, eq=False)
class BorfTransform:
    configs: tuple[SaxConfig, ...]
    channels: int
    breakpoints: dict[int, Breakpoints] = field(default_factory=dict)

    def __post_init__(self):
        configs = tuple(self.configs)
        if not configs:
            raise ShapeError("a transform needs at least one SAX configuration")
        for i, c in enumerate(configs):
            if c.config_id != i:
                raise ShapeError(f"config at position {i} has config_id {c.config_id}")
        if self.channels < 1:
            raise ShapeError("channel count must be positive")
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "breakpoints", {c.alphabet: gaussian_breakpoints(c.alphabet) for c in configs})
        offsets = config_offsets(configs)
        offsets.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def auto(cls, d: int, m: int) -> BorfTransform:
        return cls(tuple(auto_configure(d, m)), d)

    @property
    def words_per_channel(self) -> int:
        """Patterns per channel across all configs (h)."""
        return int(self.offsets[-1])

    @property
    def vocab_size(self) -> int:
        """Flattened feature count r = d * h."""
        return self.channels * self.words_per_channel

    def flat_index(self, channel: int, k: int) -> int:
        return channel * self.words_per_channel + k

    def split_index(self, flat: int) -> tuple[int, int]:
        """Inverse of :meth:`flat_index`: ``(channel, hashed word)``."""
        if not 0 <= flat < self.vocab_size:
            raise UnknownHash(f"feature {flat} outside [0, {self.vocab_size})")
        return divmod(int(flat), self.words_per_channel)

    def config_of(self, flat: int) -> SaxConfig:
        _, k = self.split_index(flat)
        return self.configs[int(np.searchsorted(self.offsets, k, side="right")) - 1]

    def word(self, flat: int) -> Word:
        _, k = self.split_index(flat)
        cid = int(np.searchsorted(self.offsets, k, side="right")) - 1
        config = self.configs[cid]
        code = k - int(self.offsets[cid])
        symbols = []
        for _ in range(config.word_length):
            code, s = divmod(code, config.alphabet)
            symbols.append(s)
        return Word(tuple(reversed(symbols)), cid)

    def config_range(self, channel: int, config_id: int) -> range:
        """Flat indices of every word of one config on one channel."""
        base = channel * self.words_per_channel
        return range(base + int(self.offsets[config_id]), base + int(self.offsets[config_id + 1]))

    def check_length(self, m: int) -> None:
        for c in self.configs:
            if c.span > m:
                raise WindowTooLarge(f"config {c.config_id} spans {c.span} points but series has {m}")

    def to_dict(self) -> dict:
        return {
            "channels": self.channels,
            "configs": [c.to_dict() for c in self.configs],
            "offsets": self.offsets.tolist(),
            "vocab_size": self.vocab_size,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> BorfTransform:
        return cls(tuple(SaxConfig(**c) for c in doc["configs"]), int(doc["channels"]))


@dataclass(eq=False)
class BorfVector:
    """Sparse counts keyed by flat index, with the (channel, start) of every occurrence."""

    counts: dict[int, int]
    occurrences: dict[int, list[tuple[int, int]]]
    vocab_size: int

    def __getitem__(self, flat: int) -> int:
        return self.counts.get(flat, 0)

    def contained(self) -> list[int]:
        return sorted(self.counts)

    def to_dense(self) -> np.ndarray:
        z = np.zeros(self.vocab_size)
        for k, v in self.counts.items():
            z[k] = v
        return z


@dataclass(eq=False)
class BorfMatrix:
    rows: list[BorfVector]
    transform: BorfTransform

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    def to_dense(self) -> np.ndarray:
        Z = np.zeros((len(self.rows), self.transform.vocab_size))
        for i, row in enumerate(self.rows):
            for k, v in row.counts.items():
                Z[i, k] = v
        return Z


def _encode(values: np.ndarray, transform: BorfTransform):
    """Flat feature index of every window: yields (channel, starts, flat[n, n_win])."""
    n, d, m = values.shape
    if d != transform.channels:
        raise ShapeError(f"series has {d} channels, transform expects {transform.channels}")
    transform.check_length(m)
    h = transform.words_per_channel
    for j in range(d):
        x = np.ascontiguousarray(values[:, j, :])
        for c in transform.configs:
            cuts = transform.breakpoints[c.alphabet].cuts
            codes = encode_windows(x, c.window, c.word_length, c.stride, c.dilation, cuts, FLAT_STD)
            starts = range(0, m - c.span + 1, c.stride)
            yield j, starts, codes + (j * h + int(transform.offsets[c.config_id]))


def _rows(values: np.ndarray, transform: BorfTransform) -> list[BorfVector]:
    n = values.shape[0]
    counts = [dict() for _ in range(n)]
    occ = [dict() for _ in range(n)]
    for j, starts, flat in _encode(values, transform):
        for i in range(n):
            ci, oi = counts[i], occ[i]
            for t, k in zip(starts, flat[i].tolist()):
                if k in ci:
                    ci[k] += 1
                    oi[k].append((j, t))
                else:
                    ci[k] = 1
                    oi[k] = [(j, t)]
    return [BorfVector(c, o, transform.vocab_size) for c, o in zip(counts, occ)]


def transform_one(series, transform: BorfTransform) -> BorfVector:
    values = np.asarray(getattr(series, "values", series), dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    return _rows(values[None], transform)[0]


def transform_dataset(data, transform: BorfTransform) -> BorfMatrix:
    values = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if values.ndim == 2:
        values = values[:, None, :]
    return BorfMatrix(_rows(values, transform), transform)


def dense_counts(data, transform: BorfTransform) -> np.ndarray:
    """``n x r`` count matrix without building occurrence lists."""
    if isinstance(data, TimeSeries):
        values = data.values[None]
    else:
        values = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
        if values.ndim == 2:
            values = values[:, None, :]
    n = values.shape[0]
    Z = np.zeros((n, transform.vocab_size))
    rows = np.arange(n)[:, None]
    for _, _, flat in _encode(values, transform):
        np.add.at(Z, (np.broadcast_to(rows, flat.shape), flat), 1.0)
    return Z


def matrix_from(Z: Sequence[BorfVector] | BorfMatrix | np.ndarray) -> np.ndarray:
    if isinstance(Z, BorfMatrix):
        return Z.to_dense()
    if isinstance(Z, np.ndarray):
        return np.asarray(Z, dtype=np.float64)
    return np.array([z.to_dense() for z in Z])
