"""Almost-injective matching between two increasing sequences and discrete fractional integration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

_TOL = 1e-12


@dataclass
class MatchResult:
    """f maps each index j of b to an index f[j] of a (after any role swap, see ``swapped``)."""

    f: np.ndarray
    g: np.ndarray
    C: float
    multiplicity: dict[int, int]
    max_fiber: int
    condition_i: bool
    condition_ii: bool
    swapped: bool = False
    reflected: bool = False
    shift: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def fiber_bound(self) -> float:
        return 4 * self.C**2 + 2


def _validate(seq: np.ndarray, name: str, C: float):
    if seq.ndim != 1 or seq.size == 0:
        raise InputError(f"{name} must be a non-empty 1-d sequence")
    gaps = np.diff(seq)
    bad = np.flatnonzero(gaps <= 0)
    if bad.size:
        raise InputError(f"{name} is not increasing at index {int(bad[0]) + 1}")
    low = np.flatnonzero(gaps < 1 / C - _TOL)
    high = np.flatnonzero(gaps > C + _TOL)
    if low.size or high.size:
        i = int(min(np.concatenate([low, high]))) + 1
        raise InputError(f"{name} gap at index {i} is {gaps[i - 1]:.6g}, outside [1/C, C] with C={C}")


def _nearest(ext: np.ndarray, signed: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Signed index of the nearest point of ``ext`` to each b, ties to the smaller signed index."""
    pos = np.searchsorted(ext, b)
    lo = np.clip(pos - 1, 0, ext.size - 1)
    hi = np.clip(pos, 0, ext.size - 1)
    dlo, dhi = np.abs(b - ext[lo]), np.abs(ext[hi] - b)
    pick = np.where(dhi < dlo, hi, lo)
    tie = dhi == dlo
    pick = np.where(tie, np.where(signed[hi] < signed[lo], hi, lo), pick)
    return signed[pick]


def verify_matching(a: np.ndarray, b: np.ndarray, f: np.ndarray) -> tuple[bool, int]:
    """Exhaustive check of |a_i - b_j| >= |a_i - a_{f(j)}|/2; returns (ok, number of violations)."""
    lhs = np.abs(a[:, None] - b[None, :])
    rhs = 0.5 * np.abs(a[:, None] - a[f][None, :])
    bad = int(np.count_nonzero(lhs < rhs - 1e-9 * (1 + np.abs(a[:, None]))))
    return bad == 0, bad


def build_matching(a, b, C: float) -> MatchResult:
    """Nearest-point matching against the mirrored extension a_{-i} = 2 a_0 - a_i.

    Normalisations applied in order: roles of a and b are swapped if b spans more
    than a; the picture is reflected if b_m > a_n; then b is translated so that
    b_m <= a_n while keeping the overlap, so only the mirror at a_0 is needed.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if C < 1:
        raise InputError("C must be >= 1")
    _validate(a, "a", C)
    _validate(b, "b", C)
    notes: list[str] = []
    swapped = False
    if b[-1] - b[0] > a[-1] - a[0] + _TOL:
        a, b = b, a
        swapped = True
        notes.append("b spans a longer interval than a: roles swapped")
    reflected = False
    if b[-1] > a[-1] + _TOL:
        a, b = -a[::-1], -b[::-1]
        reflected = True
        notes.append("b_m > a_n: reflected about the origin")
    shift = 0.0
    work = a
    if a[0] > b[-1]:
        shift = b[-1] - a[0]
        work = a + shift
        notes.append("a_0 > b_m: a translated down so that a_0 = b_m")
    n = a.size - 1
    ext = np.concatenate([2 * work[0] - work[:0:-1], work])
    signed = np.concatenate([-np.arange(n, 0, -1), np.arange(0, n + 1)])
    g = _nearest(ext, signed, b)
    f = np.abs(g)
    # the matching of the original data: undo the reflection by reversing indices
    if reflected:
        f = n - f[::-1]
        g = g[::-1]
        a, b = -a[::-1], -b[::-1]
    ok_i, _ = verify_matching(a, b, f)
    counts = np.bincount(f, minlength=a.size)
    mult = {int(i): int(c) for i, c in enumerate(counts) if c}
    max_fiber = int(counts.max())
    return MatchResult(f, g, float(C), mult, max_fiber, ok_i, max_fiber <= 4 * C**2 + 2,
                       swapped, reflected, shift, notes)


def weak_lp_sequence_norm(G, p: float) -> float:
    """sup_k k^{1/p} G*_k for a nonnegative sequence."""
    if not p > 0:
        raise InputError("p must be positive")
    g = np.sort(np.abs(np.asarray(G, dtype=float)))[::-1]
    if g.size == 0:
        return 0.0
    k = np.arange(1, g.size + 1)
    return float(np.max(k ** (1 / p) * g))


def fiber_constant(f) -> int:
    """Largest fiber size of f."""
    f = np.asarray(f)
    return int(np.bincount(f).max()) if f.size else 0


def fracint_check(a, b, G, f, r: float, envelope: float = 1.0):
    """lhs = |sum_{k,l} a_k G_{|f(k) - l|} b_l|, rhs = C^{1/r'} ||a||_r ||G||_{r'/2,inf} ||b||_r.

    C is the fiber constant of f. ``ok`` is lhs <= envelope * rhs. The kernel is
    indexed by |f(k) - l| so G must have at least max(|f(k) - l|) + 1 entries.
    """
    a, b, G = (np.asarray(x, dtype=float) for x in (a, b, G))
    f = np.asarray(f, dtype=int)
    if not 1 <= r < 2:
        raise InputError("r must lie in [1, 2)")
    if f.size != a.size:
        raise InputError("f must have one entry per a_k")
    if f.size and (f.min() < 0 or f.max() >= b.size):
        raise InputError("f maps outside the index range of b")
    dist = np.abs(f[:, None] - np.arange(b.size)[None, :])
    if dist.size and dist.max() >= G.size:
        raise InputError("kernel G too short for the index range")
    lhs = abs(float(a @ G[dist] @ b)) if dist.size else 0.0
    rp = r / (r - 1) if r > 1 else math.inf
    C = fiber_constant(f)
    gnorm = weak_lp_sequence_norm(G, rp / 2) if math.isfinite(rp) else float(np.max(np.abs(G)))
    cexp = C ** (1 / rp) if math.isfinite(rp) else 1.0
    rhs = cexp * np.linalg.norm(a, r) * gnorm * np.linalg.norm(b, r)
    return lhs, float(rhs), lhs <= envelope * rhs * (1 + 1e-12)
