"""NumPy implementation of the SAX window encoder, used when the compiled one is unavailable."""

import numpy as np


def encode_windows(x, window, word_length, stride, dilation, cuts, flat_std=1e-8):
    x = np.ascontiguousarray(x, dtype=np.float64)
    cuts = np.asarray(cuts, dtype=np.float64)
    n, m = x.shape
    span = (window - 1) * dilation + 1
    if span > m:
        return np.empty((n, 0), dtype=np.int64)
    starts = np.arange(0, m - span + 1, stride)
    win = x[:, starts[:, None] + np.arange(window) * dilation]  # (n, n_win, window)
    mu = win.mean(axis=-1, keepdims=True)
    sigma = win.std(axis=-1, keepdims=True)
    flat = sigma < flat_std
    z = (win - mu) / np.where(flat, 1.0, sigma)
    seg = window // word_length
    paa = z.reshape(n, len(starts), word_length, seg).mean(axis=-1)
    paa[np.broadcast_to(flat, paa.shape)] = 0.0
    symbols = np.searchsorted(cuts, paa, side="right").astype(np.int64)
    powers = (len(cuts) + 1) ** np.arange(word_length - 1, -1, -1, dtype=np.int64)
    return symbols @ powers
