"""Uniformly sampled fields, convolution, L^s norms and the convolution-bound checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import convolve as direct_convolve
from scipy.signal import fftconvolve

from .curve import phi_n
from .cutoff import eta
from .decomposition import Tile, TileSet
from .errors import GridRefusal, InputError
from .geometry import Paralleloid, slab_angle

DEFAULT_MAX_CELLS = 60_000_000
SLOPE_LIMIT = 16.0


@dataclass(frozen=True)
class SampledField:
    """Samples values[i0, i1, ...] at origin + h * (i0, i1, ...), in the sheared frame y' = y - shear x."""

    origin: tuple[float, ...]
    h: float
    values: np.ndarray
    shear: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise InputError("spacing must be positive")
        if len(self.origin) != self.values.ndim:
            raise InputError("origin dimension does not match values")
        if not np.all(np.isfinite(self.values)):
            raise InputError("field values must be finite")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def cell(self) -> float:
        return self.h ** self.ndim

    def integral(self) -> float:
        return float(self.values.sum() * self.cell)

    def axis(self, i: int) -> np.ndarray:
        return self.origin[i] + self.h * np.arange(self.dims[i])

    def __add__(self, other: "SampledField") -> "SampledField":
        if other.h != self.h or other.dims != self.dims or other.origin != self.origin:
            raise InputError("fields live on different grids")
        return SampledField(self.origin, self.h, self.values + other.values, self.shear)

    def scaled(self, c: float) -> "SampledField":
        return SampledField(self.origin, self.h, c * self.values, self.shear)


def _grid_axes(lo: Sequence[float], hi: Sequence[float], h: float, max_cells: int):
    lo = [math.floor(a / h) * h for a in lo]
    counts = [int(math.ceil((b - a) / h)) + 1 for a, b in zip(lo, hi)]
    if math.prod(counts) > max_cells:
        raise GridRefusal(f"grid of {counts} cells exceeds the budget of {max_cells}")
    return tuple(lo), [a + h * np.arange(c) for a, c in zip(lo, counts)]


def _check_spacing(h: float, scale: float):
    if h > scale / 8 * (1 + 1e-12):
        raise GridRefusal(f"grid spacing {h:.4g} too coarse: need h <= min(delta, beta)/8 = {scale / 8:.4g}")


# ------------------------------------------------------------------ bumps

def paralleloid_xy(P: Paralleloid, x, y):
    """Base factor eta(2a - 1) eta(2b - 1) in parallelogram coordinates (a, b)."""
    (ex, ey), (fx, fy) = P.edges
    ox, oy = P.origin
    det = ex * fy - ey * fx
    dx, dy = x - ox, y - oy
    a = (dx * fy - dy * fx) / det
    b = (ex * dy - ey * dx) / det
    return eta(2 * a - 1) * eta(2 * b - 1)


def paralleloid_z(P: Paralleloid, z):
    return eta(2 * (z - P.z_offset) / P.height - 1)


def _paralleloid_support(P: Paralleloid):
    (ex, ey), (fx, fy) = P.edges
    ox, oy = P.origin
    pts = [(ox + a * ex + b * fx, oy + a * ey + b * fy) for a in (-0.125, 1.125) for b in (-0.125, 1.125)]
    xs, ys = zip(*pts)
    return (min(xs), min(ys)), (max(xs), max(ys))


def sample_paralleloid_factors(P: Paralleloid, h: float, max_cells: int = DEFAULT_MAX_CELLS):
    """(xy field, z field): the paralleloid bump is their tensor product."""
    _check_spacing(h, min(P.thickness, P.height))
    lo, hi = _paralleloid_support(P)
    origin, (xs, ys) = _grid_axes(lo, hi, h, max_cells)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    fxy = SampledField(origin, h, paralleloid_xy(P, X, Y))
    zlo, zhi = P.z_offset - 0.125 * P.height, P.z_offset + 1.125 * P.height
    zorigin, (zs,) = _grid_axes([zlo], [zhi], h, max_cells)
    fz = SampledField(zorigin, h, paralleloid_z(P, zs))
    return fxy, fz


def tile_support_box(tile: Tile, shear: float = 0.0):
    """Bounding box of the 5/4-enlarged tile in the frame y' = y - shear x."""
    gk, beta, delta = tile.gamma_k, tile.beta, tile.delta
    xs = np.linspace(tile.x_lo - 1.25 * gk, tile.x_lo + 1.25 * gk, 257)
    zs = np.array([tile.z_lo - 1.25 * beta, tile.z_lo + 1.25 * beta])
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    base = Z * tile.model.poly(X / Z) - shear * X
    ylo = float((base - 1.25 * delta * Z).min())
    yhi = float((base + 1.25 * delta * Z).max())
    pad = 0.01 * delta
    return (xs[0], ylo - pad, zs[0]), (xs[-1], yhi + pad, zs[1])


def tile_bump_values(tile: Tile, X, Yp, Z, shear: float = 0.0):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((Yp + shear * X) / Z - tile.model.poly(X / Z)) / tile.delta
    return (eta((X - tile.x_lo) / tile.gamma_k) * eta(np.nan_to_num(t, nan=9.0))
            * eta((Z - tile.z_lo) / tile.beta))


def sample_bump(obj, h: float, box=None, shear: float = 0.0, max_cells: int = DEFAULT_MAX_CELLS):
    """Sample a tile bump (3-D) or paralleloid bump (3-D tensor product) on a grid of spacing h.

    ``box`` = (lo, hi) fixes the grid extent; it must cover the 5/4-support.
    """
    if isinstance(obj, Paralleloid):
        fxy, fz = sample_paralleloid_factors(obj.sheared(shear) if shear else obj, h, max_cells)
        vals = fxy.values[:, :, None] * fz.values[None, None, :]
        return SampledField(fxy.origin + fz.origin, h, vals, shear)
    if not isinstance(obj, Tile):
        raise InputError("sample_bump expects a Tile or a Paralleloid")
    _check_spacing(h, min(obj.delta, obj.beta))
    slo, shi = tile_support_box(obj, shear)
    if box is None:
        lo, hi = slo, shi
    else:
        lo, hi = box
        if any(a > b + 1e-12 for a, b in zip(lo, slo)) or any(a < b - 1e-12 for a, b in zip(hi, shi)):
            raise GridRefusal("grid does not cover the enlarged tile")
    origin, axes = _grid_axes(lo, hi, h, max_cells)
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return SampledField(origin, h, tile_bump_values(obj, X, Y, Z, shear), shear)


# ------------------------------------------------------------------ calculus

def convolve(f: SampledField, g: SampledField, method: str = "fft",
             max_cells: int = DEFAULT_MAX_CELLS) -> SampledField:
    """Full discrete convolution scaled by h^d; origins add."""
    if not math.isclose(f.h, g.h, rel_tol=1e-12):
        raise InputError("fields must share the grid spacing")
    if f.ndim != g.ndim:
        raise InputError("fields must share the dimension")
    if not math.isclose(f.shear, g.shear, abs_tol=1e-15):
        raise InputError("fields must share the shear frame")
    out_dims = [a + b - 1 for a, b in zip(f.dims, g.dims)]
    if math.prod(out_dims) > max_cells:
        raise GridRefusal(f"convolution of size {out_dims} exceeds the budget of {max_cells}")
    if method == "fft":
        vals = fftconvolve(f.values, g.values, mode="full")
    elif method == "direct":
        vals = direct_convolve(f.values, g.values, mode="full", method="direct")
    else:
        raise InputError(f"unknown convolution method {method!r}")
    origin = tuple(a + b for a, b in zip(f.origin, g.origin))
    return SampledField(origin, f.h, vals * f.cell, f.shear)


def ls_norm(f: SampledField, s: float) -> float:
    """(h^d sum |f|^s)^{1/s}; s = inf gives the maximum."""
    if math.isinf(s):
        return float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if s < 1:
        raise InputError("s must be >= 1")
    return float((f.cell * np.sum(np.abs(f.values) ** s)) ** (1 / s))


def power_integral(f: SampledField, s: float) -> float:
    """h^d sum |f|^s (the s-th power of the L^s norm)."""
    return float(f.cell * np.sum(np.abs(f.values) ** s))


# ------------------------------------------------------------------ convolution bound

def convolution_bound(beta, delta, gamma1, gamma2, alpha, s) -> float:
    """(beta delta)^{s+1} gamma2^s gamma1 / (1 + gamma2 alpha / delta)^{s-1}."""
    return (beta * delta) ** (s + 1) * gamma2**s * gamma1 / (1 + gamma2 * alpha / delta) ** (s - 1)


@dataclass
class ConvBoundReport:
    computed: float
    bound: float
    ratio: float
    s: float
    h: float
    alpha: float
    slope_gap: float
    computed_half: float = float("nan")
    rel_change: float = float("nan")
    converged: bool = False
    meta: dict = field(default_factory=dict)


def _separable_conv_power(P1: Paralleloid, P2: Paralleloid, s: float, h: float, shear: float,
                          max_cells: int) -> float:
    a_xy, a_z = sample_paralleloid_factors(P1.sheared(shear), h, max_cells)
    b_xy, b_z = sample_paralleloid_factors(P2.sheared(shear), h, max_cells)
    cxy = convolve(a_xy, b_xy, max_cells=max_cells)
    cz = convolve(a_z, b_z, max_cells=max_cells)
    return power_integral(cxy, s) * power_integral(cz, s)


def paralleloid_conv_power(P1: Paralleloid, P2: Paralleloid, s: float, h: float | None = None,
                           max_cells: int = DEFAULT_MAX_CELLS) -> float:
    """int |phi_1 * phi_2|^s using the tensor structure and a mean-slope shear."""
    if h is None:
        h = min(P1.thickness, P2.thickness, P1.height, P2.height) / 16
    shear = 0.5 * (P1.slope + P2.slope)
    return _separable_conv_power(P1, P2, s, h, shear, max_cells)


def verify_convolution_bound(P1: Paralleloid, P2: Paralleloid, s: float, h: float | None = None,
                             check_convergence: bool = True, slope_limit: float = SLOPE_LIMIT,
                             max_cells: int = DEFAULT_MAX_CELLS, tolerance: float = 0.02) -> ConvBoundReport:
    """Both sides of int |phi_1 * phi_2|^s <= C (beta delta)^{s+1} gamma2^s gamma1 / (1 + gamma2 alpha/delta)^{s-1}.

    The narrower paralleloid is taken as the second one. Both must share thickness
    and height. The grid result at h is accepted when halving h changes it by less
    than ``tolerance``.
    """
    if s < 1:
        raise InputError("s must be >= 1")
    for P in (P1, P2):
        if abs(P.slope) > slope_limit:
            raise InputError(f"slope {P.slope:.4g} exceeds the configured bound {slope_limit}")
    if P2.width > P1.width:
        P1, P2 = P2, P1
    delta = max(P1.thickness, P2.thickness)
    beta = max(P1.height, P2.height)
    if h is None:
        h = min(delta, beta) / 16
    alpha, gap = slab_angle(P1.slope, P2.slope)
    computed = paralleloid_conv_power(P1, P2, s, h, max_cells)
    bound = convolution_bound(beta, delta, P1.width, P2.width, alpha, s)
    rep = ConvBoundReport(computed, bound, computed / bound, s, h, alpha, gap)
    if check_convergence:
        half = paralleloid_conv_power(P1, P2, s, h / 2, max_cells)
        rep.computed_half = half
        rep.rel_change = abs(half - computed) / abs(half) if half else 0.0
        rep.converged = rep.rel_change < tolerance
        rep.computed, rep.ratio = half, half / bound
    return rep


def s_one_closed_form(P1: Paralleloid, P2: Paralleloid) -> float:
    """For s = 1 the integral factorises: int phi_1 int phi_2 = (9/8)^6 |Q_1||Q_2|."""
    return (9 / 8) ** 6 * P1.volume() * P2.volume()


def tile_paralleloid(tileset: TileSet, index) -> Paralleloid:
    """Paralleloid with the tile's width, thickness delta, height beta and slope Phi_n'(x_kj)."""
    t = tileset[index]
    slope = float(phi_n(tileset.model, t.n * t.beta, t.x_lo, 1))
    width = t.x_hi - t.x_lo
    base_y = float(phi_n(tileset.model, t.n * t.beta, t.x_lo))
    centre = (t.x_lo + width / 2, base_y + slope * width / 2 + t.delta / 2)
    return Paralleloid.from_slab(width, t.delta, slope, t.beta, centre, t.z_lo)


def tile_angle(tileset: TileSet, alpha, mu) -> tuple[float, float]:
    """(|Phi_n'(x_kj) - Phi_p'(x_li)|, |arctan of both difference|)."""
    beta = tileset.params.beta
    s1 = float(phi_n(tileset.model, alpha[2] * beta, tileset.cell(alpha[0], alpha[1]).x_lo, 1))
    s2 = float(phi_n(tileset.model, mu[2] * beta, tileset.cell(mu[0], mu[1]).x_lo, 1))
    ang, gap = slab_angle(s1, s2)
    return gap, ang


# ------------------------------------------------------------------ level-dependent bounds

def matching_distance(tileset: TileSet, alpha, mu) -> tuple[int, float]:
    """h(i, j) = |f(j) - i| from the matching of renormalised slope sequences at level k = l."""
    from .matching import build_matching

    k, j, n = alpha
    l, i, p = mu
    if k != l:
        raise InputError("matching distance needs equal levels")
    beta, delta = tileset.params.beta, tileset.params.delta
    gk = tileset.params.gamma_k(k)
    cells = tileset.level_cells(k)
    xs = np.array([c.x_lo for c in cells])
    a = phi_n(tileset.model, p * beta, xs, 1) * gk / delta
    b = phi_n(tileset.model, n * beta, xs, 1) * gk / delta
    gaps = np.concatenate([np.diff(a), np.diff(b)])
    if gaps.size == 0:
        return abs(j - i), 1.0
    C = float(max(gaps.max(), 1 / gaps.min(), 1.0))
    res = build_matching(a, b, C)
    if res.swapped:
        return abs(j - int(res.f[i])), C
    return abs(int(res.f[j]) - i), C


def korfuenf_bound(tileset: TileSet, alpha, mu, s: float, hij: int | None = None) -> float:
    m = tileset.model.m
    beta, delta, gamma = tileset.params.beta, tileset.params.delta, tileset.params.gamma
    k, l = alpha[0], mu[0]
    head = (beta * delta * gamma) ** (s + 1) * 2.0 ** ((k + l) * (1 + s - s * m) / 2)
    if abs(k - l) > 2:
        return head * 2.0 ** (-abs(k - l) * (m - 1) * (s - 1) / 2)
    if hij is None:
        hij, _ = matching_distance(tileset, alpha, mu) if k == l else (0, 1.0)
    return head * (2.0 ** ((k + l) * m / 4) / (1 + hij)) ** (s - 1)


@dataclass
class KorfuenfReport:
    computed: float
    bound: float
    ratio: float
    case: str
    hij: int | None
    converged: bool
    rel_change: float


def verify_korfuenf(tileset: TileSet, alpha, mu, s: float, h: float | None = None,
                    check_convergence: bool = True) -> KorfuenfReport:
    """int |phi_alpha * phi_mu|^s on the tile paralleloids against the level-dependent bound."""
    P1, P2 = tile_paralleloid(tileset, alpha), tile_paralleloid(tileset, mu)
    p = tileset.params
    if h is None:
        h = min(p.delta, p.beta) / 16
    val = paralleloid_conv_power(P1, P2, s, h)
    rel, conv = float("nan"), False
    if check_convergence:
        half = paralleloid_conv_power(P1, P2, s, h / 2)
        rel = abs(half - val) / half if half else 0.0
        conv, val = rel < 0.02, half
    k, l = alpha[0], mu[0]
    hij = None
    if abs(k - l) > 2:
        case = "far"
    else:
        case = "near"
        hij = matching_distance(tileset, alpha, mu)[0] if k == l else 0
    bound = korfuenf_bound(tileset, alpha, mu, s, hij)
    return KorfuenfReport(val, bound, val / bound, case, hij, conv, rel)


def exponent_s(p_prime: float) -> float:
    """s with 1/s + 2/p' = 1."""
    if p_prime <= 2:
        raise InputError("p' must exceed 2")
    return 1 / (1 - 2 / p_prime)


def check_region(m: int, p_prime: float, q: float):
    """Raise InputError naming the first violated constraint of the admissible region."""
    if not p_prime > m + 1:
        raise InputError(f"exponent violates p' > m+1 (p'={p_prime:g}, m+1={m + 1})")
    if not 3 / p_prime < 1 / q:
        raise InputError(f"exponent violates 3/p' < 1/q (1/q={1 / q:g}, 3/p'={3 / p_prime:g})")
    if not 1 / q < 0.5 + 1 / p_prime:
        raise InputError(f"exponent violates 1/q < 1/2 + 1/p' (1/q={1 / q:g})")


@dataclass
class VereinigungReport:
    lhs: float
    rhs: float
    ratio: float
    holder_lhs: float
    holder_rhs: float


def verify_vereinigung(tileset: TileSet, k: int, l: int, n: int, p: int, a, b, s: float, q: float,
                       h: float | None = None) -> VereinigungReport:
    """sum_{ij} |a_j|^s |b_i|^s int |phi_kjn * phi_lip|^s against the level-summed bound."""
    m = tileset.model.m
    p_prime = 2 / (1 - 1 / s)
    if not math.isclose(1 / s + 2 / p_prime, 1.0):
        raise InputError("exponents violate 1/s + 2/p' = 1")
    if not 3 / p_prime < 1 / q < 0.5 + 1 / p_prime:
        raise InputError("exponent violates 3/p' < 1/q < 1/2 + 1/p'")
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ck, cl = tileset.level_cells(k), tileset.level_cells(l)
    if a.size != len(ck) or b.size != len(cl):
        raise InputError("coefficient vectors must match the lateral tile counts")
    pr = tileset.params
    if h is None:
        h = min(pr.delta, pr.beta) / 16
    lhs = 0.0
    for j, cj in enumerate(ck):
        if a[j] == 0:
            continue
        P1 = tile_paralleloid(tileset, (k, cj.j, n))
        for i, ci in enumerate(cl):
            if b[i] == 0:
                continue
            P2 = tile_paralleloid(tileset, (l, ci.j, p))
            lhs += abs(a[j]) ** s * abs(b[i]) ** s * paralleloid_conv_power(P1, P2, s, h)
    qp = q / (q - 1) if q > 1 else math.inf
    na, nb = np.linalg.norm(a, qp), np.linalg.norm(b, qp)
    rhs = ((pr.beta * pr.delta * pr.gamma) ** (s + 1) * na**s * nb**s
           * 2.0 ** ((k + l) * (1 + s - s * m + m * (1 - s / qp)) / 2)
           * 2.0 ** (-abs(k - l) * (m - 1) * (s - 1) / 2))
    holder_lhs = float(np.sum(np.abs(a) ** s))
    holder_rhs = float(na**s * 2.0 ** ((k / 2) * m * (1 - s / qp)))
    return VereinigungReport(lhs, rhs, lhs / rhs if rhs else 0.0, holder_lhs, holder_rhs)
