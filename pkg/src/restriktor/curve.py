"""Finite-type profiles Phi(x) = x^m * chi(x) with exact polynomial derivatives."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError

_EPS = 1e-12


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def _poly_deriv(coeffs: tuple[Fraction, ...], order: int) -> tuple[Fraction, ...]:
    c = list(coeffs)
    for _ in range(order):
        c = [i * c[i] for i in range(1, len(c))]
    return tuple(c) if c else (Fraction(0),)


def _horner(coeffs: Sequence, x):
    acc = 0 * x
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class CurveModel:
    """Profile Phi(x) = x^m chi(x) on [0, 1], chi a polynomial with rational coefficients.

    ``chi`` holds ascending coefficients; the default is the constant 1.
    """

    m: int
    chi: tuple[Fraction, ...] = field(default=(Fraction(1),))

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 3:
            raise InputError(f"order of contact m must be an integer >= 3, got {self.m}")
        chi = tuple(_as_fraction(c) for c in self.chi)
        while len(chi) > 1 and chi[-1] == 0:
            chi = chi[:-1]
        if not chi or all(c == 0 for c in chi):
            raise InputError("chi must not vanish identically")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "chi", chi)

    @cached_property
    def phi_coeffs(self) -> tuple[Fraction, ...]:
        return (Fraction(0),) * self.m + self.chi

    @property
    def degree(self) -> int:
        return len(self.phi_coeffs) - 1

    def coeffs(self, order: int = 0) -> tuple[Fraction, ...]:
        """Exact ascending coefficients of Phi^(order)."""
        return self._deriv_cache[order] if order < len(self._deriv_cache) else (Fraction(0),)

    @cached_property
    def _deriv_cache(self) -> list[tuple[Fraction, ...]]:
        return [_poly_deriv(self.phi_coeffs, k) for k in range(self.degree + 1)]

    @cached_property
    def _float_coeffs(self) -> list[np.ndarray]:
        return [np.array([float(c) for c in cs]) for cs in self._deriv_cache]

    def poly(self, x, order: int = 0):
        """Evaluate Phi^(order) by polynomial extension, with no domain check."""
        if order > self.degree:
            return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        if isinstance(x, Fraction):
            return _horner(self._deriv_cache[order], x)
        return np.polynomial.polynomial.polyval(x, self._float_coeffs[order])

    def chi_value(self, x):
        if isinstance(x, Fraction):
            return _horner(self.chi, x)
        return np.polynomial.polynomial.polyval(x, np.array([float(c) for c in self.chi]))

    @cached_property
    def chi2_coeffs(self) -> tuple[Fraction, ...]:
        """chi^2 with Phi''(x) = x^(m-2) chi^2(x); exact since Phi'' has a zero of order m-2."""
        c = self.coeffs(2)
        return c[self.m - 2:]

    def __str__(self) -> str:
        chi = " ".join(str(c) for c in self.chi)
        return f"CurveModel(m={self.m}, chi=[{chi}])"


def _check_unit(x, what: str = "x"):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -_EPS) or np.any(arr > 1 + _EPS) or np.any(~np.isfinite(arr)):
        raise InputError(f"{what} must lie in [0, 1]")


def eval_phi(model: CurveModel, x, deriv_order: int = 0):
    """Phi^(deriv_order)(x) for x in [0, 1] (scalar, array or exact Fraction)."""
    if deriv_order < 0:
        raise InputError("deriv_order must be >= 0")
    if deriv_order > model.degree:
        raise InputError(f"deriv_order {deriv_order} exceeds m + deg(chi) = {model.degree}")
    _check_unit(x)
    return model.poly(x, deriv_order)


def eval_phi_n(model: CurveModel, n_index: int, beta: float, x, deriv_order: int = 0):
    """Derivative of the rescaled profile Phi_n(x) = n beta Phi(x / (n beta))."""
    scale = n_index * beta
    if scale < 1 - _EPS or scale > 2 + _EPS:
        raise InputError(f"n*beta = {scale} outside [1, 2]")
    u = np.asarray(x, dtype=float) / scale
    _check_unit(u, "x/(n*beta)")
    if deriv_order > model.degree:
        raise InputError(f"deriv_order {deriv_order} exceeds m + deg(chi) = {model.degree}")
    val = model.poly(u if np.ndim(x) else float(u), deriv_order)
    return scale ** (1 - deriv_order) * val


def phi_n(model: CurveModel, scale, x, order: int = 0):
    """Unchecked vectorised Phi_n with ``scale`` = n*beta (any broadcastable shapes)."""
    scale = np.asarray(scale, dtype=float)
    return scale ** (1 - order) * model.poly(np.asarray(x, dtype=float) / scale, order)


@dataclass
class ValidationReport:
    passed: bool
    minima: dict[int, float]
    chi_min: float
    chi2_min: float
    chi2_max: float
    failures: list[str]


def _critical_points(coeffs: Sequence[Fraction], lo: float, hi: float) -> list[float]:
    d = _poly_deriv(tuple(coeffs), 1)
    arr = np.array([float(c) for c in d])
    while arr.size > 1 and arr[-1] == 0:
        arr = arr[:-1]
    if arr.size <= 1:
        return []
    roots = np.polynomial.polynomial.polyroots(arr)
    out = []
    for r in roots:
        if abs(r.imag) < 1e-10 and lo <= r.real <= hi:
            out.append(float(r.real))
    return out


def _min_on(coeffs, grid: list[Fraction], lo: float, hi: float) -> float:
    vals = [float(_horner(coeffs, g)) for g in grid]
    vals += [float(_horner(coeffs, _as_fraction(c))) for c in _critical_points(coeffs, lo, hi)]
    return min(vals)


def validate_finite_type(model: CurveModel, sample_count: int = 257) -> ValidationReport:
    """Check positivity of Phi^(k), k <= m, on (0, 1] and of chi, chi^2 on [0, 1].

    The sample grid is augmented with the real critical points of each polynomial,
    so the minimum found is the true minimum up to root-finding accuracy.
    """
    if sample_count < 2:
        raise InputError("sample_count must be >= 2")
    open_grid = [Fraction(i, sample_count) for i in range(1, sample_count + 1)]
    closed_grid = [Fraction(0)] + open_grid
    failures: list[str] = []
    minima: dict[int, float] = {}
    for k in range(model.m + 1):
        mn = _min_on(model.coeffs(k), open_grid, 1e-300, 1.0)
        minima[k] = mn
        if not mn > 0:
            failures.append(f"Phi^({k}) has minimum {mn:.6g} <= 0 on (0,1]")
    chi_min = _min_on(model.chi, closed_grid, 0.0, 1.0)
    if not chi_min > 0:
        failures.append(f"chi has minimum {chi_min:.6g} <= 0 on [0,1]")
    c2 = model.chi2_coeffs
    chi2_min = _min_on(c2, closed_grid, 0.0, 1.0)
    chi2_max = -_min_on(tuple(-c for c in c2), closed_grid, 0.0, 1.0)
    if not chi2_min > 0:
        failures.append(f"chi^2 = Phi''/x^(m-2) has minimum {chi2_min:.6g} <= 0")
    return ValidationReport(not failures, minima, chi_min, chi2_min, chi2_max, failures)


def taylor_bounds(model: CurveModel, sample_count: int = 257) -> tuple[float, float]:
    """(min, max) of Phi^(m) on [0, 1], divided by m!."""
    grid = [Fraction(i, sample_count) for i in range(sample_count + 1)]
    cm = model.coeffs(model.m)
    lo = _min_on(cm, grid, 0.0, 1.0)
    hi = -_min_on(tuple(-c for c in cm), grid, 0.0, 1.0)
    f = math.factorial(model.m)
    return lo / f, hi / f


_KV = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*[:=]\s*(.*?)\s*$")


def parse_model_text(text: str) -> CurveModel:
    """Parse ``m = 4`` / ``chi = 1 1/2`` key-value text (``#`` starts a comment)."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _KV.match(line)
        if not match:
            raise InputError(f"model line {lineno}: expected 'key = value', got {raw!r}")
        values[match.group(1).lower()] = match.group(2)
    if "m" not in values:
        raise InputError("model description lacks 'm'")
    try:
        m = int(values["m"])
        chi = tuple(Fraction(tok) for tok in values.get("chi", "1").split())
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed model description: {exc}") from exc
    return CurveModel(m, chi)


def load_model(path: str | Path) -> CurveModel:
    return parse_model_text(Path(path).read_text())


def model_to_text(model: CurveModel) -> str:
    return f"m = {model.m}\nchi = {' '.join(str(c) for c in model.chi)}\n"
