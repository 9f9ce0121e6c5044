"""SAX vocabulary: Gaussian breakpoints, PAA, window encoding and word hashing."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from mascots.errors import InvalidAlphabet, LengthError, UnknownHash, WindowTooLarge

# windows whose standard deviation falls below this are treated as flat
FLAT_STD = 1e-8


@dataclass(frozen=True)
class SaxConfig:
    """One discretization scheme: window size, word length, alphabet, stride, dilation."""

    window: int
    word_length: int
    alphabet: int = 3
    stride: int = 1
    dilation: int = 1
    config_id: int = 0

    def __post_init__(self):
        if self.window < 1 or self.word_length < 1:
            raise LengthError("window and word_length must be positive")
        if self.word_length > self.window or self.window % self.word_length:
            raise LengthError(f"word_length {self.word_length} must divide window {self.window}")
        if self.alphabet < 2:
            raise InvalidAlphabet(f"alphabet size must be at least 2, got {self.alphabet}")
        if self.stride < 1 or self.dilation < 1:
            raise LengthError("stride and dilation must be positive")

    @property
    def segment(self) -> int:
        return self.window // self.word_length

    @property
    def span(self) -> int:
        """Number of timestamps covered by one (dilated) window."""
        return (self.window - 1) * self.dilation + 1

    @property
    def n_words(self) -> int:
        return self.alphabet**self.word_length

    def n_windows(self, length: int) -> int:
        if self.span > length:
            return 0
        return (length - self.span) // self.stride + 1

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "word_length": self.word_length,
            "alphabet": self.alphabet,
            "stride": self.stride,
            "dilation": self.dilation,
            "config_id": self.config_id,
        }


@dataclass(frozen=True)
class Word:
    symbols: tuple[int, ...]
    config_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return "[" + ",".join(str(s) for s in self.symbols) + "]"


@dataclass(frozen=True, eq=False)
class Breakpoints:
    cuts: np.ndarray
    centers: np.ndarray

    @property
    def alphabet(self) -> int:
        return len(self.centers)


@dataclass(frozen=True, eq=False)
class WindowStats:
    mean: float
    std: float
    paa: np.ndarray


@lru_cache(maxsize=None)
def gaussian_breakpoints(alphabet: int) -> Breakpoints:
    """Equiprobable N(0, 1) bins and the quantile at each bin's central probability."""
    if alphabet < 2:
        raise InvalidAlphabet(f"alphabet size must be at least 2, got {alphabet}")
    cuts = ndtri(np.arange(1, alphabet) / alphabet)
    centers = ndtri((2 * np.arange(alphabet) + 1) / (2 * alphabet))
    cuts.setflags(write=False)
    centers.setflags(write=False)
    return Breakpoints(cuts, centers)


def paa(segment_values: Sequence[float], word_length: int) -> np.ndarray:
    """Means of ``word_length`` equal-sized consecutive segments."""
    x = np.asarray(segment_values, dtype=np.float64)
    w = x.shape[-1]
    if word_length < 1 or w % word_length:
        raise LengthError(f"word_length {word_length} does not divide length {w}")
    return x.reshape(x.shape[:-1] + (word_length, w // word_length)).mean(axis=-1)


def window_stats(window: Sequence[float], config: SaxConfig) -> WindowStats:
    """Mean, population std and PAA of the standardized window.

    Flat windows (std below ``FLAT_STD``) get ``std = 1`` and an all-zero PAA.
    """
    x = np.asarray(window, dtype=np.float64)
    if x.shape != (config.window,):
        raise LengthError(f"window has {x.size} points, config expects {config.window}")
    mu = float(x.mean())
    sigma = float(x.std())
    if sigma < FLAT_STD:
        return WindowStats(mu, 1.0, np.zeros(config.word_length))
    return WindowStats(mu, sigma, paa((x - mu) / sigma, config.word_length))


def symbols_for(values: np.ndarray, breakpoints: Breakpoints) -> np.ndarray:
    """Bin index of each value; values equal to a cut fall into the upper bin."""
    return np.searchsorted(breakpoints.cuts, values, side="right")


def sax_encode(stats: WindowStats, breakpoints: Breakpoints, config: SaxConfig) -> Word:
    if len(stats.paa) != config.word_length:
        raise LengthError(f"PAA has {len(stats.paa)} values, config expects {config.word_length}")
    return Word(tuple(symbols_for(stats.paa, breakpoints).tolist()), config.config_id)


def extract_windows(series, channel: int, config: SaxConfig) -> list[tuple[int, np.ndarray]]:
    """All ``(start, values)`` receptive fields of one channel."""
    values = np.asarray(getattr(series, "values", series), dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    x = values[channel]
    m = x.shape[0]
    if config.span > m:
        raise WindowTooLarge(f"window spans {config.span} points but series has {m}")
    offsets = np.arange(config.window) * config.dilation
    return [(t, x[t + offsets]) for t in range(0, m - config.span + 1, config.stride)]


def config_offsets(configs: Sequence[SaxConfig]) -> np.ndarray:
    """Start of each config's hash range; the last entry is the total range size."""
    return np.concatenate([[0], np.cumsum([c.n_words for c in configs])]).astype(np.int64)


def word_code(symbols: Sequence[int], alphabet: int) -> int:
    """Base-``alphabet`` positional value of a word, most significant symbol first."""
    code = 0
    for s in symbols:
        code = code * alphabet + int(s)
    return code


def hash_word(word: Word, configs: Sequence[SaxConfig]) -> int:
    config = configs[word.config_id]
    if len(word.symbols) != config.word_length or any(not 0 <= s < config.alphabet for s in word.symbols):
        raise LengthError(f"word {word} is not valid for config {config}")
    return int(config_offsets(configs)[word.config_id]) + word_code(word.symbols, config.alphabet)


def unhash_word(k: int, configs: Sequence[SaxConfig]) -> Word:
    offsets = config_offsets(configs)
    if not 0 <= k < offsets[-1]:
        raise UnknownHash(f"hash {k} outside [0, {offsets[-1]})")
    cid = int(np.searchsorted(offsets, k, side="right")) - 1
    config = configs[cid]
    code = int(k - offsets[cid])
    symbols = []
    for _ in range(config.word_length):
        code, s = divmod(code, config.alphabet)
        symbols.append(s)
    return Word(tuple(reversed(symbols)), cid)
