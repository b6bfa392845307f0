"""Extension-operator experiments: Knapp scaling, oscillatory decay, endpoint divergence
and a desk-scale check of the weighted discrete extension estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .curve import CurveModel
from .decomposition import TileSet
from .errors import GridRefusal, InputError, QuadratureRefusal
from .fields import DEFAULT_MAX_CELLS, _check_spacing, tile_bump_values, tile_support_box

_NODES = 16


@lru_cache(maxsize=8)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def panel_nodes(lo: float, hi: float, panels: int, nodes: int = _NODES):
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = _gauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return ((a + b) / 2 + (b - a) / 2 * x).ravel(), ((b - a) / 2 * w).ravel()


# ------------------------------------------------------------------ exponents

@dataclass(frozen=True)
class ExponentPoint:
    """Exponent pair (p, q) with derived p' = p/(p-1) and s from 1/s + 2/p' = 1."""

    p: float
    q: float
    m: int

    def __post_init__(self):
        if not self.p >= 1:
            raise InputError("p must be >= 1")
        if not self.q >= 1:
            raise InputError("q must be >= 1")

    @property
    def p_prime(self) -> float:
        return math.inf if self.p == 1 else self.p / (self.p - 1)

    @property
    def q_prime(self) -> float:
        return math.inf if self.q == 1 else self.q / (self.q - 1)

    @property
    def s(self) -> float:
        return 1 / (1 - 2 / self.p_prime)

    @property
    def knapp_residual(self) -> float:
        """1/q - (m+1)/p'."""
        return 1 / self.q - (self.m + 1) / self.p_prime

    @property
    def lower_residual(self) -> float:
        """1/q - 3/p'."""
        return 1 / self.q - 3 / self.p_prime

    @property
    def upper_residual(self) -> float:
        """1/q - (1/2 + 1/p')."""
        return 1 / self.q - (0.5 + 1 / self.p_prime)

    @property
    def in_p_range(self) -> bool:
        return 1 <= self.p < (self.m + 1) / self.m

    @property
    def restriction_admissible(self) -> bool:
        """p in [1, (m+1)/m) and 1/q >= (m+1)/p'."""
        return self.in_p_range and self.knapp_residual >= 0

    @property
    def discrete_admissible(self) -> bool:
        """p' > m+1 and 3/p' < 1/q < 1/2 + 1/p'."""
        return self.p_prime > self.m + 1 and self.lower_residual > 0 and self.upper_residual < 0


def exponent_from_dual(p_prime: float, q: float, m: int) -> ExponentPoint:
    return ExponentPoint(p_prime / (p_prime - 1), q, m)


@dataclass
class FitReport:
    x: list[float]
    y: list[float]
    slope: float
    expected: float
    rel_error: float
    extra: dict = field(default_factory=dict)

    @property
    def passed_tolerance(self) -> float:
        return self.rel_error


def _fit(x, y, expected) -> FitReport:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 4:
        raise InputError("a fit needs at least 4 samples")
    slope = float(np.polyfit(x, y, 1)[0])
    rel = abs(slope - expected) / abs(expected) if expected else abs(slope)
    return FitReport(list(map(float, x)), list(map(float, y)), slope, float(expected), float(rel))


# ------------------------------------------------------------------ extension transform

def _panel_count(phase_variation: float, per_panel: float = 4.0) -> int:
    return int(math.ceil(phase_variation / per_panel)) + 4


def extension_transform(model: CurveModel, xi, weight=None, max_panels: int = 200_000) -> complex:
    """Extension of a weight on the curve (len(xi) = 2) or cone section (len(xi) = 3).

    Curve:  int_0^1 g(x) exp(-i(a x + b Phi(x))) dx.
    Cone:   int_1^2 int_0^1 g(x, z) exp(-i(a x + b z Phi(x/z) + c z)) dx dz.
    The graph-parameter measure dx (dx dz) is used. ``weight`` is a vectorised
    callable (default 1).
    """
    xi = tuple(float(v) for v in xi)
    dmax = float(np.max(np.abs(model.poly(np.linspace(0, 1, 65), 1))))
    if len(xi) == 2:
        a, b = xi
        panels = _panel_count(abs(a) + abs(b) * dmax)
        if panels > max_panels:
            raise QuadratureRefusal(f"{panels} panels needed for |xi| = {math.hypot(a, b):.3g}")
        x, w = panel_nodes(0.0, 1.0, panels)
        g = np.ones_like(x) if weight is None else weight(x)
        return complex(np.sum(w * g * np.exp(-1j * (a * x + b * model.poly(x)))))
    if len(xi) == 3:
        a, b, c = xi
        fmax = float(np.max(np.abs(model.poly(np.linspace(0, 1, 65)))))
        px = _panel_count(abs(a) + abs(b) * dmax)
        pz = _panel_count(abs(c) + abs(b) * (fmax + dmax))
        if px * pz > max_panels:
            raise QuadratureRefusal(f"{px}x{pz} panels needed for |xi| = {math.dist(xi, (0, 0, 0)):.3g}")
        x, wx = panel_nodes(0.0, 1.0, px)
        z, wz = panel_nodes(1.0, 2.0, pz)
        X, Z = np.meshgrid(x, z, indexing="ij")
        g = np.ones_like(X) if weight is None else weight(X, Z)
        ph = a * X + b * Z * model.poly(X / Z) + c * Z
        return complex(np.sum(wx[:, None] * wz[None, :] * g * np.exp(-1j * ph)))
    raise InputError("frequency must have 2 or 3 components")


def extension_transform_reference(model: CurveModel, xi) -> complex:
    """Adaptive-quadrature value of the curve transform (independent oracle)."""
    a, b = (float(v) for v in xi)

    def ph(x):
        return a * x + b * float(model.poly(x))

    lim = 20 + int(abs(a) + abs(b) * 10)
    re = integrate.quad(lambda x: math.cos(ph(x)), 0, 1, limit=lim, epsabs=1e-13, epsrel=1e-13)[0]
    im = integrate.quad(lambda x: -math.sin(ph(x)), 0, 1, limit=lim, epsabs=1e-13, epsrel=1e-13)[0]
    return complex(re, im)


# ------------------------------------------------------------------ Knapp scaling

def gaussian_profile_norms(sigma: float, p: float, m: int, r: float) -> float:
    """||f_r||_p for f(x, y) = exp(-(x^2 + y^2) / (2 sigma^2)) and f_r(x, y) = f(r x, r^m y)."""
    return (2 * math.pi * sigma**2 / (p * r ** (1 + m))) ** (1 / p)


def knapp_quotient(model: CurveModel, p: float, q: float, r: float, sigma: float = 3.0) -> float:
    """||hat f_r||_{L_q(curve)} / ||f_r||_p with the Gaussian profile (closed-form transform)."""
    m = model.m
    pref = r ** (-(1 + m)) * 2 * math.pi * sigma**2

    def integrand(t):
        xi = t / r
        eta = float(model.poly(t)) / r**m
        return (pref * math.exp(-0.5 * sigma**2 * (xi * xi + eta * eta))) ** q

    # the transform is negligible once t/r exceeds ~ 10/sigma
    cut = min(1.0, 12.0 * r / sigma)
    val = integrate.quad(integrand, 0.0, cut, limit=200, epsabs=0, epsrel=1e-12)[0]
    if cut < 1.0:
        val += integrate.quad(integrand, cut, 1.0, limit=200, epsabs=0, epsrel=1e-12)[0]
    return val ** (1 / q) / gaussian_profile_norms(sigma, p, m, r)


def knapp_scaling_fit(model: CurveModel, p: float, q: float, radii, sigma: float = 3.0) -> FitReport:
    """Slope of log quotient against log(1/r); expected -(1/q - (m+1)/p')."""
    radii = [float(r) for r in radii]
    if len(radii) < 4:
        raise InputError("need at least 4 dilation values")
    if any(not 0 < r <= 1 for r in radii):
        raise InputError("dilations must lie in (0, 1]")
    pt = ExponentPoint(p, q, model.m)
    xs = [math.log(1 / r) for r in radii]
    ys = [math.log(knapp_quotient(model, p, q, r, sigma)) for r in radii]
    rep = _fit(xs, ys, -pt.knapp_residual)
    rep.extra.update(p=p, q=q, p_prime=pt.p_prime)
    return rep


# ------------------------------------------------------------------ oscillatory decay

def oscillatory_integral(m: int, lam: float, T: float = 2.0, domain: str = "stationary",
                         sign: int = -1, max_panels: int = 200_000) -> complex:
    """int_0^L exp(-i(x^m + sign * lam * x)) dx.

    ``domain="stationary"``: L = T (lam/m)^{1/(m-1)}, i.e. T times the stationary
    point of x^m - lam x. ``domain="scaled"``: L = T lam^{1/m}.
    """
    if domain == "stationary":
        L = T * (lam / m) ** (1 / (m - 1))
    elif domain == "scaled":
        L = T * lam ** (1 / m)
    else:
        raise InputError(f"unknown domain {domain!r}")
    panels = _panel_count(L**m + lam * L, per_panel=2.0)
    if panels > max_panels:
        raise QuadratureRefusal(f"{panels} panels needed at lambda={lam:g}")
    x, w = panel_nodes(0.0, L, panels, 32)
    return complex(np.sum(w * np.exp(-1j * (x**m + sign * lam * x))))


def oscillatory_decay_fit(m: int, lambdas, T: float = 2.0, domain: str = "stationary",
                          sign: int = -1) -> FitReport:
    """Fit log|I(lam)| against log lam; expected -(m-2)/(2m-2)."""
    lambdas = [float(v) for v in lambdas]
    if len(lambdas) < 5:
        raise InputError("need at least 5 lambda values")
    xs = [math.log(v) for v in lambdas]
    ys = [math.log(abs(oscillatory_integral(m, v, T, domain, sign))) for v in lambdas]
    rep = _fit(xs, ys, -(m - 2) / (2 * m - 2))
    rep.extra.update(T=T, domain=domain, sign=sign)
    return rep


# ------------------------------------------------------------------ endpoint divergence

def _ray_integral(m: int, a: float, b: float, t: float) -> complex:
    """int along t + r e^{-i theta}, r in [0, inf), of exp(-i(b u^m - a u)) du, theta = pi/(2m).

    Requires psi'(t) = m b t^{m-1} - a > 0; then |integrand| <= exp(-psi'(t) r sin theta - b r^m).
    """
    theta = math.pi / (2 * m)
    dpsi = m * b * t ** (m - 1) - a
    R = (45.0 / b) ** (1 / m)
    if dpsi > 0:
        R = min(R, 45.0 / (dpsi * math.sin(theta)))
    var = abs(dpsi) * R + sum(math.comb(m, k) * b * t ** (m - k) * R**k for k in range(2, m))
    r, w = panel_nodes(0.0, R, _panel_count(var, 3.0))
    d = np.exp(-1j * theta)
    u = t + r * d
    return complex(np.sum(w * np.exp(-1j * (b * u**m - a * u))) * d)


def curve_transform_monomial(m: int, a: float, b: float) -> complex:
    """int_0^1 exp(-i(b x^m - a x)) dx for a >= 0, b > 0 (frequency (-a, b) of the curve x^m).

    Direct quadrature up to c = 2 x_s (x_s the stationary point) and two
    steepest-descent rays for the remainder [c, 1].
    """
    xs = (a / (m * b)) ** (1 / (m - 1)) if a > 0 else 0.0
    c = 2 * xs
    if c >= 1 or b * 1.0 < 50:
        x, w = panel_nodes(0.0, 1.0, _panel_count(a + m * b))
        return complex(np.sum(w * np.exp(-1j * (b * x**m - a * x))))
    x, w = panel_nodes(0.0, c, _panel_count(a * c + b * c**m))
    head = complex(np.sum(w * np.exp(-1j * (b * x**m - a * x))))
    return head + _ray_integral(m, a, b, c) - _ray_integral(m, a, b, 1.0)


def endpoint_divergence_scan(m: int, p_prime: float, growth=(2, 4, 8, 16, 32, 64), C: float = 1.0,
                             a_nodes: int = 12, b_panel: float = 0.25, b_nodes: int = 8,
                             tail_blocks: int = 3) -> FitReport:
    """Partial integrals F(A) = int_1^A int_C^{C a^m} |F(a, b)|^{p'} db da.

    Integration is in log a (Gauss nodes per dyadic block) and log b (panels of
    width ``b_panel``). ``slope`` is the least-squares slope of F against log A;
    ``extra['increment_slope']`` is the slope of log(F(2A) - F(A)) against log A over
    the last ``tail_blocks`` blocks. The predicted value is m - p' + 1: 0 at the
    endpoint (unbounded growth) and negative when the integral converges.
    """
    growth = sorted(float(A) for A in growth)
    if len(growth) < 4:
        raise InputError("need at least 4 region sizes")
    if p_prime < m + 1 - 1e-12:
        raise InputError("p' must be >= m+1")
    xg, wg = _gauss(a_nodes)
    edges = [1.0] + growth
    partial = []
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        la, lb = math.log(lo), math.log(hi)
        block = 0.0
        for xn, wn in zip(xg, wg):
            loga = (la + lb) / 2 + (lb - la) / 2 * xn
            a = math.exp(loga)
            blo, bhi = math.log(C), math.log(C * a**m)
            npan = max(1, int(math.ceil((bhi - blo) / b_panel)))
            logb, wb = panel_nodes(blo, bhi, npan, b_nodes)
            vals = np.array([abs(curve_transform_monomial(m, a, math.exp(v))) for v in logb])
            inner = float(np.sum(wb * vals**p_prime * np.exp(logb)))
            block += (lb - la) / 2 * wn * inner * a
        total += block
        partial.append(total)
    logA = [math.log(A) for A in growth]
    slope = float(np.polyfit(logA, partial, 1)[0])
    inc = np.diff(partial)
    tail = slice(-tail_blocks, None)
    inc_slope = float(np.polyfit(np.array(logA[1:])[tail], np.log(np.maximum(inc, 1e-300))[tail], 1)[0])
    expected = m - p_prime + 1
    rep = FitReport(logA, partial, slope, float(expected), float("nan"))
    rep.extra.update(increment_slope=inc_slope, increments=list(map(float, inc)), p_prime=p_prime)
    return rep


# ------------------------------------------------------------------ discrete extension spot check

@dataclass
class SpotCheckReport:
    ratios: list[float]
    lhs: list[float]
    rhs: list[float]
    envelope: float
    window: list[tuple[int, int, int]]
    grid: tuple[int, ...]
    h: float
    parseval_error: float


def default_window(tileset: TileSet) -> list[tuple[int, int, int]]:
    """Two neighbouring lateral cells of the finest available level, two height layers."""
    k = 1 if len(tileset.levels) > 1 else 0
    cells = tileset.level_cells(k)[:2]
    n0 = tileset.n_range.start
    ns = [n0, n0 + 1] if len(tileset.n_range) > 1 else [n0]
    return [(c.k, c.j, n) for c in cells for n in ns]


def _rfft_weights(n_last: int) -> np.ndarray:
    """Multiplicity of each rfft bin along the halved axis in the full spectrum."""
    w = np.full(n_last // 2 + 1, 2.0)
    w[0] = 1.0
    if n_last % 2 == 0:
        w[-1] = 1.0
    return w


def superlemma_spot_check(tileset: TileSet, coefficient_draws, p: float, q: float, h: float | None = None,
                          window=None, pad: int = 2, max_cells: int = DEFAULT_MAX_CELLS) -> SpotCheckReport:
    """Ratios ||sum a_alpha hat phi_alpha||_{p'} / (delta^{1/q} ||sum a_alpha w_alpha phi_alpha||_{q'}).

    w_alpha = (2^k gamma)^{1/q - (m+1)/p'}. Fields are sampled in the sheared frame
    y' = y - c x (c the window's mean slope), which leaves both norms unchanged;
    the transform uses a zero-padded FFT.
    """
    m = tileset.model.m
    pt = ExponentPoint(p, q, m)
    pp = pt.p_prime
    from .fields import check_region

    check_region(m, pp, q)
    pr = tileset.params
    if pr.delta < 2.0**-8 * (1 - 1e-12):
        raise InputError("spot check is limited to delta >= 2^-8")
    if h is None:
        h = min(pr.delta, pr.beta) / 8
    _check_spacing(h, min(pr.delta, pr.beta))
    window = default_window(tileset) if window is None else [tuple(w) for w in window]
    tiles = [tileset[w] for w in window]
    xs = np.array([x for t in tiles for x in (t.x_lo, t.x_hi)])
    ys = np.array([float(t.n * t.beta * tileset.model.poly(x / (t.n * t.beta)))
                   for t in tiles for x in (t.x_lo, t.x_hi)])
    shear = float(np.polyfit(xs, ys, 1)[0])
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for t in tiles:
        a, b = tile_support_box(t, shear)
        lo, hi = np.minimum(lo, a), np.maximum(hi, b)
    lo = np.floor(lo / h) * h
    dims = [int(math.ceil((b - a) / h)) + 1 for a, b in zip(lo, hi)]
    padded = [pad * d for d in dims]
    if math.prod(padded) > max_cells:
        raise GridRefusal(f"padded grid {padded} exceeds the budget of {max_cells}")
    axes = [a + h * np.arange(d) for a, d in zip(lo, dims)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    fields = [tile_bump_values(t, X, Y, Z, shear) for t in tiles]
    del X, Y, Z
    weights = np.array([(2.0**t.k * pr.gamma) ** (1 / q - (m + 1) / pp) for t in tiles])
    spec_w = _rfft_weights(padded[-1])[None, None, :]
    dxi3 = math.prod(2 * math.pi / (n * h) for n in padded)
    qp = pt.q_prime
    ratios, lhs_l, rhs_l = [], [], []
    parseval = float("nan")
    for draw in coefficient_draws:
        coeffs = np.asarray(draw, float)
        if coeffs.size != len(tiles):
            raise InputError("coefficient draw does not match the window size")
        g = sum(c * f for c, f in zip(coeffs, fields))
        gw = sum(c * w * f for c, w, f in zip(coeffs, weights, fields))
        G = np.abs(np.fft.rfftn(g, s=padded, axes=(0, 1, 2))) * h**3
        lhs = float((np.sum(spec_w * G**pp) * dxi3) ** (1 / pp))
        if math.isnan(parseval) and np.any(coeffs):
            l2_hat = math.sqrt(float(np.sum(spec_w * G**2)) * dxi3)
            l2 = math.sqrt(float(np.sum(g**2)) * h**3)
            parseval = abs(l2_hat / ((2 * math.pi) ** 1.5 * l2) - 1)
        rhs = pr.delta ** (1 / q) * float((np.sum(np.abs(gw) ** qp) * h**3) ** (1 / qp))
        lhs_l.append(lhs)
        rhs_l.append(rhs)
        ratios.append(lhs / rhs if rhs > 0 else 0.0)
    return SpotCheckReport(ratios, lhs_l, rhs_l, max(ratios, default=0.0), window, tuple(dims), h, parseval)
