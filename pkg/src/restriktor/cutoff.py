"""Smooth plateau cutoffs used by the tile bumps."""
from __future__ import annotations

import numpy as np


def smoothstep(u):
    """C^2 quintic step: 0 for u <= 0, 1 for u >= 1, u^3(10 - 15u + 6u^2) in between."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def eta(t):
    """Plateau cutoff with 1 on [-1, 1] and support [-5/4, 5/4]."""
    return smoothstep(5.0 - 4.0 * np.abs(np.asarray(t, dtype=float)))


def eta_wide(t):
    """Plateau cutoff with 1 on [-1, 1] and support [-2, 2]."""
    return smoothstep(2.0 - np.abs(np.asarray(t, dtype=float)))


# integral of eta over the real line: plateau 2 plus two ramps of width 1/4 and mean 1/2
ETA_INTEGRAL = 2.25
