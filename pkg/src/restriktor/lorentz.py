"""Distribution functions, rearrangements and Lorentz norms of nonnegative step functions.

Lorentz norms use the unnormalised form
    ||f||_{p,q} = ( int_0^inf (t^{1/p} f*(t))^q dt/t )^{1/q},   ||f||_{p,inf} = sup t^{1/p} f*(t),
so that ||1_E||_{p,1} = p |E|^{1/p} and ||f||_{p,p} = ||f||_p.  ``normalized=True``
multiplies by (q/p)^{1/q}; then ||1_E||_{p,q} = |E|^{1/p} for every q and the
norm is non-increasing in q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from .cutoff import smoothstep
from .errors import InputError


@dataclass(frozen=True)
class StepFunction:
    """Nonnegative simple function given by (measure, value) pieces."""

    pieces: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        clean = []
        for mu, v in self.pieces:
            mu, v = float(mu), float(v)
            if not (mu >= 0 and math.isfinite(mu)) or not (v >= 0 and math.isfinite(v)):
                raise InputError("pieces need finite nonnegative measure and value")
            if mu > 0:
                clean.append((mu, v))
        object.__setattr__(self, "pieces", tuple(clean))

    @classmethod
    def from_arrays(cls, measures: Iterable[float], values: Iterable[float]) -> "StepFunction":
        return cls(tuple(zip(measures, values)))

    @property
    def total_measure(self) -> float:
        return sum(mu for mu, _ in self.pieces)

    def integral(self) -> float:
        return sum(mu * v for mu, v in self.pieces)

    def sup(self) -> float:
        return max((v for _, v in self.pieces), default=0.0)

    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct positive values v_1 > ... > v_N and cumulative measures T_i = |{f >= v_i}|."""
        vals: dict[float, float] = {}
        for mu, v in self.pieces:
            if v > 0:
                vals[v] = vals.get(v, 0.0) + mu
        if not vals:
            return np.zeros(0), np.zeros(0)
        v = np.array(sorted(vals, reverse=True))
        T = np.cumsum([vals[x] for x in v])
        return v, T

    def scaled(self, measure_factor: float = 1.0, value_factor: float = 1.0) -> "StepFunction":
        return StepFunction(tuple((mu * measure_factor, v * value_factor) for mu, v in self.pieces))


def distribution_function(f: StepFunction, s: float) -> float:
    """|{f > s}|."""
    if s < 0:
        raise InputError("s must be >= 0")
    return sum(mu for mu, v in f.pieces if v > s)


def decreasing_rearrangement(f: StepFunction, t: float) -> float:
    """f*(t) = inf{s > 0 : d_f(s) <= t}, right-continuous."""
    if t < 0:
        raise InputError("t must be >= 0")
    v, T = f.levels()
    idx = np.searchsorted(T, t, side="right")
    return float(v[idx]) if idx < v.size else 0.0


def lorentz_norm(f: StepFunction, p: float, q: float, normalized: bool = False) -> float:
    """Closed-form Lorentz quasi-norm of a step function (q may be math.inf)."""
    if not p > 0:
        raise InputError("p must be positive")
    if not q > 0:
        raise InputError("q must be positive")
    v, T = f.levels()
    if v.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(v * T ** (1 / p)))
    if math.isinf(p):
        raise InputError("p = inf requires q = inf")
    Tprev = np.concatenate([[0.0], T[:-1]])
    total = (p / q) * np.sum(v**q * (T ** (q / p) - Tprev ** (q / p)))
    val = float(total ** (1 / q))
    return val * (q / p) ** (1 / q) if normalized else val


def lp_norm(f: StepFunction, p: float) -> float:
    if math.isinf(p):
        return f.sup()
    return sum(mu * v**p for mu, v in f.pieces) ** (1 / p)


def product(f: StepFunction, g: StepFunction) -> StepFunction:
    """Pointwise product of two step functions on aligned pieces (same measures, same order)."""
    if len(f.pieces) != len(g.pieces):
        raise InputError("pieces are not aligned")
    out = []
    for (m1, v1), (m2, v2) in zip(f.pieces, g.pieces):
        if not math.isclose(m1, m2, rel_tol=1e-12):
            raise InputError("pieces are not aligned")
        out.append((m1, v1 * v2))
    return StepFunction(tuple(out))


def weight_weak_norm(delta: float, s: float, model=None, grid_points: int = 1024) -> tuple[float, float]:
    """Lower and upper step brackets of || x^{-1/s} ||_{L_{s,inf}} on the thickened cone section.

    The layer measure is |{x^{-1/s} > lam}| = delta * min(lam^{-s}, 1) * int_1^2 z dz.
    The weight is bracketed by step functions on a geometric grid of x in [x_min, 1]
    with ``grid_points`` cells; below x_min the tiny remaining mass is bounded
    separately. ``model`` is accepted for interface symmetry; the layer formula is
    profile independent.
    """
    if s < 1:
        raise InputError("s must be >= 1")
    if delta <= 0:
        raise InputError("delta must be positive")
    zint = 1.5
    x_min = 2.0**-40
    edges = np.geomspace(x_min, 1.0, grid_points + 1)
    meas = delta * zint * np.diff(edges)
    lower = StepFunction.from_arrays(meas, edges[1:] ** (-1 / s))
    # the upper bracket also absorbs the cell (0, x_min] using sup of t^{1/s} f*(t) there
    upper = StepFunction.from_arrays(meas, edges[:-1] ** (-1 / s))
    lo = lorentz_norm(lower, s, math.inf)
    hi = lorentz_norm(upper, s, math.inf)
    return lo, hi


def weight_weak_norm_exact(delta: float, s: float) -> float:
    """sup_lam lam * (delta lam^{-s} 3/2)^{1/s} = (3 delta / 2)^{1/s}."""
    return (1.5 * delta) ** (1 / s)


# ----------------------------------------------------------------- thickening

def _eta_wide_level(level: float) -> float:
    """|{t : eta(t) > level}| / 2 for the cutoff with support [-2, 2] and plateau [-1, 1]."""
    if level >= 1:
        return 0.0
    if level <= 0:
        return 2.0
    u = brentq(lambda x: float(smoothstep(x)) - level, 0.0, 1.0, xtol=1e-15)
    return 1.0 + u


def thickened_distribution(g: StepFunction, delta: float, s: float, mode: str = "smooth") -> float:
    """Distribution of g(x) eta(y/delta) at level s.

    In ``support`` mode the cutoff is replaced by the indicator of its support [-2, 2].
    """
    total = 0.0
    for mu, v in g.pieces:
        if v <= s:
            continue
        if mode == "support":
            width = 4.0
        else:
            width = 2.0 * _eta_wide_level(s / v)
        total += mu * delta * width
    return total


def thickening_rearrangement_check(g: StepFunction, delta: float, q_prime: float = 2.0,
                                   mode: str = "smooth"):
    """Verify d_{g~}(s) <= 4 delta d_g(s) on all breakpoints and the L_{q',1} comparison.

    Returns (lhs, rhs, ok) where lhs/rhs are the worst distribution pair and ``ok``
    also requires ||g~||_{q',1} <= 4^{1/q'} delta^{1/q'} ||g||_{q',1}.
    """
    if delta <= 0:
        raise InputError("delta must be positive")
    values = sorted({v for _, v in g.pieces} | {0.0})
    probes = []
    for v in values:
        probes += [v, v * (1 - 1e-9), v * 0.5]
    ok = True
    worst = (0.0, 0.0)
    worst_ratio = -1.0
    for s in probes:
        if s < 0:
            continue
        lhs = thickened_distribution(g, delta, s, mode)
        rhs = 4 * delta * distribution_function(g, s)
        if lhs > rhs * (1 + 1e-12):
            ok = False
        r = lhs / rhs if rhs > 0 else 0.0
        if r > worst_ratio:
            worst_ratio, worst = r, (lhs, rhs)
    support = StepFunction(tuple((mu * 4 * delta, v) for mu, v in g.pieces))
    norm_t = lorentz_norm(support, q_prime, 1)
    norm_g = lorentz_norm(g, q_prime, 1)
    ok = ok and norm_t <= 4 ** (1 / q_prime) * delta ** (1 / q_prime) * norm_g * (1 + 1e-12)
    return worst[0], worst[1], ok


# ----------------------------------------------------------------- Hoelder

def _check_exponents(p1, p2, q1, q2, r1, r2):
    def inv(x):
        return 0.0 if math.isinf(x) else 1.0 / x

    if not math.isclose(inv(p1), inv(q1) + inv(r1), rel_tol=1e-12, abs_tol=1e-15):
        raise InputError("exponents violate 1/p1 = 1/q1 + 1/r1")
    if not math.isclose(inv(p2), inv(q2) + inv(r2), rel_tol=1e-12, abs_tol=1e-15):
        raise InputError("exponents violate 1/p2 = 1/q2 + 1/r2")


def lorentz_holder_check(f: StepFunction, g: StepFunction, exponents, constant: float | None = None):
    """Compare ||fg||_{p1,p2} with c ||f||_{q1,q2} ||g||_{r1,r2} on aligned pieces.

    ``exponents`` = (p1, p2, q1, q2, r1, r2). The default constant is 2^{1/p1},
    which the rearrangement bound (fg)*(t) <= f*(t/2) g*(t/2) always supports;
    pass ``constant=1`` for the constant-free form.
    """
    p1, p2, q1, q2, r1, r2 = exponents
    _check_exponents(p1, p2, q1, q2, r1, r2)
    c = 2 ** (1 / p1) if constant is None else constant
    lhs = lorentz_norm(product(f, g), p1, p2)
    rhs = c * lorentz_norm(f, q1, q2) * lorentz_norm(g, r1, r2)
    return lhs, rhs, lhs <= rhs * (1 + 1e-12)
