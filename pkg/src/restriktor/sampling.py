"""Deterministic low-discrepancy sampling."""
from __future__ import annotations

import numpy as np
from scipy.stats import qmc


def halton(dim: int, count: int, seed: int) -> np.ndarray:
    """``count`` scrambled Halton points in [0, 1)^dim, reproducible from ``seed``."""
    if count <= 0:
        return np.zeros((0, dim))
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(count)
