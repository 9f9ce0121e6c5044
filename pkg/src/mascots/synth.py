"""Cylinder / bell / funnel generator for demos and smoke tests."""

from __future__ import annotations

import numpy as np

from mascots.dataset_io import Dataset

CLASS_NAMES = ("cylinder", "bell", "funnel")


def cylinder_bell_funnel(n: int, length: int = 128, seed: int = 0, noise: float = 1.0) -> Dataset:
    """``n`` univariate series with classes cycling cylinder, bell, funnel.

    Each series is ``(6 + eta) * shape(t) + eps`` with ``eta, eps ~ N(0, 1)``,
    onset ``a ~ U[L/8, L/4]`` and duration ``b - a ~ U[L/4, 3L/4]`` (the
    classic 16/32 and 32/96 ranges at L = 128). The plateau is flat for a
    cylinder, a rising ramp for a bell and a falling ramp for a funnel.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if length < 16:
        raise ValueError("length must be at least 16")
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    values = np.empty((n, 1, length))
    labels = np.arange(n) % 3
    for i, cls in enumerate(labels):
        a = int(rng.integers(length // 8, length // 4 + 1))
        b = min(a + int(rng.integers(length // 4, 3 * length // 4 + 1)), length - 1)
        eta = rng.normal()
        eps = rng.normal(scale=noise, size=length)
        inside = (t >= a) & (t <= b)
        if cls == 0:
            shape = inside.astype(float)
        elif cls == 1:
            shape = inside * (t - a) / (b - a)
        else:
            shape = inside * (b - t) / (b - a)
        values[i, 0] = (6 + eta) * shape + eps
    return Dataset(values, labels, CLASS_NAMES, tuple(f"cbf:{seed}:{i}" for i in range(n)))
