"""Overlap counting for sums of tiles, using the enclosing parallelepipeds.

Every tile Gamma_{kjn} sits inside the outer box
    z in [n beta, (n+1) beta],  x in [x_lo, x_hi],
    |y - Phi_n(x_lo) - Phi_n'(x_lo)(x - x_lo)| <= w,   w = 10 m delta.
Point membership in the Minkowski sum of two such boxes is decided exactly:
the z-part is an interval test, the (x, y)-part is a zonogon test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .curve import phi_n
from .decomposition import TileSet
from .errors import InputError, PreconditionError
from .sampling import halton

_EPS = 1e-12


@dataclass(frozen=True)
class OuterBoxes:
    """Tabulated outer boxes: base[n_pos, cell] = Phi_n(x_lo), slope[n_pos, cell] = Phi_n'(x_lo)."""

    tileset: TileSet
    thickness_factor: float = 10.0

    @cached_property
    def xlo(self) -> np.ndarray:
        return np.array([c.x_lo for c in self.tileset.cells])

    @cached_property
    def xhi(self) -> np.ndarray:
        return np.array([c.x_hi for c in self.tileset.cells])

    @cached_property
    def level(self) -> np.ndarray:
        return np.array([c.k for c in self.tileset.cells])

    @cached_property
    def jidx(self) -> np.ndarray:
        return np.array([c.j for c in self.tileset.cells])

    @cached_property
    def n_values(self) -> np.ndarray:
        return np.arange(self.tileset.n_range.start, self.tileset.n_range.stop)

    @cached_property
    def _tables(self):
        scale = self.n_values[:, None] * self.tileset.params.beta
        base = phi_n(self.tileset.model, scale, self.xlo[None, :], 0)
        slope = phi_n(self.tileset.model, scale, self.xlo[None, :], 1)
        return base, slope

    @property
    def base(self) -> np.ndarray:
        return self._tables[0]

    @property
    def slope(self) -> np.ndarray:
        return self._tables[1]

    @property
    def half_width(self) -> float:
        return self.thickness_factor * self.tileset.model.m * self.tileset.params.delta

    def corners(self, cell_id: int, n: int) -> np.ndarray:
        """The 8 corners of one outer box as rows (x, y, z)."""
        pos = n - self.tileset.n_range.start
        c, s = self.base[pos, cell_id], self.slope[pos, cell_id]
        lo, hi = self.xlo[cell_id], self.xhi[cell_id]
        beta = self.tileset.params.beta
        pts = []
        for x in (lo, hi):
            for dy in (-self.half_width, self.half_width):
                for z in (n * beta, (n + 1) * beta):
                    pts.append((x, c + s * (x - lo) + dy, z))
        return np.array(pts)


@dataclass
class Hits:
    """All (n, p, cell1, cell2) with the point in the sum of the two outer boxes."""

    n: np.ndarray
    p: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    def __len__(self) -> int:
        return int(self.n.size)


def _zonogon_contains(X, Y, xlo1, dx1, c1, s1, xlo2, dx2, c2, s2, width):
    """Vectorised test of (X, Y) in the sum of two sheared boxes of half-thickness width/2 each."""
    xr = X - xlo1 - xlo2
    u_lo = np.maximum(0.0, xr - dx2)
    u_hi = np.minimum(dx1, xr)
    ok = u_lo <= u_hi + _EPS
    lin_lo = s1 * u_lo + s2 * (xr - u_lo)
    lin_hi = s1 * u_hi + s2 * (xr - u_hi)
    centre = c1 + c2
    ymin = centre + np.minimum(lin_lo, lin_hi) - width
    ymax = centre + np.maximum(lin_lo, lin_hi) + width
    return ok & (ymin - _EPS <= Y) & (Y <= ymax + _EPS)


def _true_sum_contains(X, Y, Z, beta, delta, model, xa, xb, na, xc, xd, nb):
    """Exact test of (X, Y, Z) in the sum of two curved tiles (vectorised over candidates).

    With x2 = X - x1 and z2 = Z - z1 the sum contains the point iff some feasible
    (x1, z1) has L <= Y <= L + Z delta, where L = z1 Phi(x1/z1) + z2 Phi(x2/z2).
    L is convex, so its range over the feasible rectangle R is [min, max] with the
    max at a vertex; the unconstrained minimisers are the ray x1/z1 = X/Z, and on
    each edge the minimiser is that ray clamped to the edge.
    """
    x_lo = np.maximum(xa, X - xd)
    x_hi = np.minimum(xb, X - xc)
    z_lo = np.maximum(na * beta, Z - (nb + 1) * beta)
    z_hi = np.minimum((na + 1) * beta, Z - nb * beta)
    feasible = (x_lo <= x_hi + _EPS) & (z_lo <= z_hi + _EPS) & (X > 0) & (Z > 0)
    x_hi = np.maximum(x_hi, x_lo)
    z_hi = np.maximum(z_hi, z_lo)
    r = X / Z if Z > 0 else 0.0

    def L(x1, z1):
        z2 = Z - z1
        return z1 * model.poly(x1 / z1) + z2 * model.poly((X - x1) / z2)

    vals = [L(x, z) for x in (x_lo, x_hi) for z in (z_lo, z_hi)]
    lmax = np.maximum.reduce(vals)
    edge = [L(np.clip(r * z, x_lo, x_hi), z) for z in (z_lo, z_hi)]
    if r > 0:
        edge += [L(x, np.clip(x / r, z_lo, z_hi)) for x in (x_lo, x_hi)]
    lmin = np.minimum.reduce(edge)
    # the ray meets R iff r z_lo <= x_hi and r z_hi >= x_lo
    on_ray = (r * z_lo <= x_hi + _EPS) & (r * z_hi >= x_lo - _EPS)
    lmin = np.where(on_ray, Z * model.poly(r), lmin)
    tol = 1e-12
    return feasible & (lmin <= Y + tol) & (Y - Z * delta <= lmax + tol)


def outer_thickness_factor(tileset: TileSet, grid: int = 65) -> float:
    """Smallest factor f (times m delta) whose outer boxes contain every tile, sampled on a grid."""
    model, beta, delta = tileset.model, tileset.params.beta, tileset.params.delta
    worst = 0.0
    for c in tileset.cells:
        x = np.linspace(c.x_lo, c.x_hi, grid)
        for n in tileset.n_range:
            base = phi_n(model, n * beta, c.x_lo)
            slope = phi_n(model, n * beta, c.x_lo, 1)
            line = base + slope * (x - c.x_lo)
            for z in (n * beta, (n + 1) * beta):
                low = z * model.poly(x / z)
                dev = np.maximum(np.abs(low - line), np.abs(low + z * delta - line))
                worst = max(worst, float(dev.max()))
    return worst / (model.m * delta)


class OverlapEngine:
    """Enumerates, for a point, every tile pair whose outer-box sum contains it.

    With ``exact=True`` the outer boxes only prefilter and hits are confirmed by
    exact membership in the sum of the true curved tiles.
    """

    def __init__(self, tileset: TileSet, thickness_factor: float = 10.0, exact: bool = False):
        self.tileset = tileset
        self.exact = exact
        self.boxes = OuterBoxes(tileset, thickness_factor)
        b = self.boxes
        self._dx = b.xhi - b.xlo
        T = len(tileset.cells)
        i1, i2 = np.meshgrid(np.arange(T), np.arange(T), indexing="ij")
        self._pair1 = i1.ravel()
        self._pair2 = i2.ravel()
        self._pair_lo = b.xlo[self._pair1] + b.xlo[self._pair2]
        self._pair_hi = b.xhi[self._pair1] + b.xhi[self._pair2]

    def hits(self, point, window_slack: int = 0) -> Hits:
        X, Y, Z = (float(v) for v in point)
        b = self.boxes
        beta = self.tileset.params.beta
        n0, n1 = b.n_values[0], b.n_values[-1]
        sel = (self._pair_lo - _EPS <= X) & (X <= self._pair_hi + _EPS)
        t1, t2 = self._pair1[sel], self._pair2[sel]
        empty = Hits(*(np.zeros(0, dtype=int) for _ in range(4)))
        if t1.size == 0:
            return empty
        s_lo = math.ceil(Z / beta - 2 - 1e-9) - window_slack
        s_hi = math.floor(Z / beta + 1e-9) + window_slack
        ns, ps = [], []
        for S in range(s_lo, s_hi + 1):
            lo, hi = max(n0, S - n1), min(n1, S - n0)
            if lo <= hi:
                nn = np.arange(lo, hi + 1)
                ns.append(nn)
                ps.append(S - nn)
        if not ns:
            return empty
        nv = np.concatenate(ns)
        pv = np.concatenate(ps)
        npos, ppos = nv - n0, pv - n0
        inside = _zonogon_contains(
            X, Y,
            b.xlo[t1][None, :], self._dx[t1][None, :], b.base[npos][:, t1], b.slope[npos][:, t1],
            b.xlo[t2][None, :], self._dx[t2][None, :], b.base[ppos][:, t2], b.slope[ppos][:, t2],
            2 * b.half_width,
        )
        qi, pi = np.nonzero(inside)
        out = Hits(nv[qi], pv[qi], t1[pi], t2[pi])
        if self.exact and len(out):
            out = self._confirm(out, X, Y, Z)
        return out

    def _confirm(self, h: Hits, X, Y, Z) -> Hits:
        b, p = self.boxes, self.tileset.params
        keep = _true_sum_contains(X, Y, Z, p.beta, p.delta, self.tileset.model,
                                  b.xlo[h.c1], b.xhi[h.c1], h.n, b.xlo[h.c2], b.xhi[h.c2], h.p)
        return Hits(h.n[keep], h.p[keep], h.c1[keep], h.c2[keep])

    def z_window_hits(self, point) -> Hits:
        """Hits with the exact z-interval test applied (nbeta + pbeta <= Z <= (n+p+2) beta)."""
        h = self.hits(point)
        beta = self.tileset.params.beta
        Z = float(point[2])
        keep = ((h.n + h.p) * beta <= Z + _EPS) & (Z <= (h.n + h.p + 2) * beta + _EPS)
        return Hits(h.n[keep], h.p[keep], h.c1[keep], h.c2[keep])


def sumset_contains(engine: OverlapEngine, alpha, mu, point) -> bool:
    """Membership of ``point`` in the sum of the outer boxes of tiles alpha and mu."""
    ts = engine.tileset
    if not (ts.has(alpha) and ts.has(mu)):
        raise InputError("invalid tile index")
    X, Y, Z = (float(v) for v in point)
    beta = ts.params.beta
    n, p = alpha[2], mu[2]
    if not ((n + p) * beta - _EPS <= Z <= (n + p + 2) * beta + _EPS):
        return False
    b = engine.boxes
    a, m = ts.cell_id(alpha[0], alpha[1]), ts.cell_id(mu[0], mu[1])
    n0 = ts.n_range.start
    return bool(_zonogon_contains(
        X, Y, b.xlo[a], engine._dx[a], b.base[n - n0, a], b.slope[n - n0, a],
        b.xlo[m], engine._dx[m], b.base[p - n0, m], b.slope[p - n0, m], 2 * b.half_width))


def corner_point(tileset: TileSet, alpha) -> np.ndarray:
    """Representative point (x_kj, Phi_n(x_kj), n beta) of a tile."""
    k, j, n = alpha
    c = tileset.cell(k, j)
    beta = tileset.params.beta
    return np.array([c.x_lo, float(phi_n(tileset.model, n * beta, c.x_lo)), n * beta])


# ---------------------------------------------------------------- counters

def count_overlap_z(engine: OverlapEngine, point) -> int:
    h = engine.z_window_hits(point)
    if len(h) == 0:
        return 0
    return int(np.unique(h.n * 1_000_003 + h.p).size)


def count_overlap_k(engine: OverlapEngine, point, n: int, p: int) -> int:
    """Number of levels k such that the point lies in a sum with level(second) <= k."""
    h = engine.z_window_hits(point)
    lv = engine.boxes.level
    sel = (h.n == n) & (h.p == p)
    k1, k2 = lv[h.c1[sel]], lv[h.c2[sel]]
    return int(np.unique(k1[k2 <= k1]).size)


def count_overlap_rest(engine: OverlapEngine, point, k: int, n: int, p: int) -> int:
    """Number of (j, l, i) with the point in Gamma_{kjn} + Gamma_{lip}."""
    h = engine.z_window_hits(point)
    lv = engine.boxes.level
    sel = (h.n == n) & (h.p == p) & (lv[h.c1] == k)
    return int(np.count_nonzero(sel))


@dataclass
class PointCounts:
    z_pairs: int
    k_count: int
    rest_count: int
    total: int
    doubled_total: int = 0


def point_counts(engine: OverlapEngine, point, doubled: bool = False) -> PointCounts:
    """All counters at one point; k and rest counts are maxima over (n, p) and (k, n, p)."""
    h = engine.z_window_hits(point)
    if len(h) == 0:
        return PointCounts(0, 0, 0, 0, doubled_count(engine, point) if doubled else 0)
    lv = engine.boxes.level
    key_np = h.n * 1_000_003 + h.p
    z_pairs = int(np.unique(key_np).size)
    k1, k2 = lv[h.c1], lv[h.c2]
    sel = k2 <= k1
    kc = np.unique(key_np[sel] * 64 + k1[sel])
    k_count = int(np.bincount(np.unique(kc // 64, return_inverse=True)[1]).max()) if kc.size else 0
    _, rest = np.unique(key_np * 64 + k1, return_counts=True)
    dc = doubled_count(engine, point) if doubled else 0
    return PointCounts(z_pairs, k_count, int(rest.max()), len(h), dc)


def doubled_count(engine: OverlapEngine, point) -> int:
    """Number of ordered pairs (alpha, mu) with the point in G_alpha + G_mu."""
    ts = engine.tileset
    delta, beta = ts.params.delta, ts.params.beta
    n0, N = ts.n_range.start, len(ts.n_range)
    T = len(ts.cells)
    X, Y, Z = (float(v) for v in point)
    codes = []
    for v in range(-2, 3):
        h = engine.hits((X, Y - v * delta, Z), window_slack=0)
        if len(h) == 0:
            continue
        codes.append(((h.n - n0) * T + h.c1) * (N * T) + (h.p - n0) * T + h.c2)
    if not codes:
        return 0
    base = np.unique(np.concatenate(codes))
    a, m = base // (N * T), base % (N * T)
    na, ca = a // T, a % T
    nm, cm = m // T, m % T
    neigh = _neighbour_table(engine)
    A = _dilate(na, ca, neigh, N, T)
    M = _dilate(nm, cm, neigh, N, T)
    pairs = (A[:, :, None] * (N * T) + M[:, None, :])
    valid = (A[:, :, None] >= 0) & (M[:, None, :] >= 0)
    return int(np.unique(pairs[valid]).size)


def _neighbour_table(engine: OverlapEngine) -> np.ndarray:
    cache = getattr(engine, "_neigh", None)
    if cache is None:
        ts = engine.tileset
        T = len(ts.cells)
        cache = np.full((T, 3), -1, dtype=int)
        for t, c in enumerate(ts.cells):
            for col, u in enumerate((-1, 0, 1)):
                if (c.k, c.j + u) in ts._cell_index:
                    cache[t, col] = ts.cell_id(c.k, c.j + u)
        engine._neigh = cache
    return cache


def _dilate(npos, cell, neigh, N, T) -> np.ndarray:
    """Indices of all tiles having the given tile among their 3x3 lateral/height neighbours."""
    out = []
    for col in range(3):
        nc = neigh[cell, col]
        for w in (-1, 0, 1):
            nn = npos + w
            ok = (nc >= 0) & (nn >= 0) & (nn < N)
            out.append(np.where(ok, nn * T + nc, -1))
    return np.stack(out, axis=1)


# ---------------------------------------------------------------- global audit

@dataclass
class OverlapReport:
    samples: int
    max_z_pairs: int = 0
    max_k_count: int = 0
    max_rest_count: int = 0
    max_total: int = 0
    max_doubled_total: int = 0
    bound_z: float = 0.0
    bound_k: int = 3
    bound_total_shape: float = 0.0
    violations_z: int = 0
    violations_k: int = 0
    witnesses: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    def rows(self) -> list[tuple[str, float, str, float]]:
        c = max(self.max_rest_count, 1)
        beta_inv = self.bound_z / 3 if self.bound_z else 0.0
        rows = [
            ("count_overlap_z", self.max_z_pairs, "3/beta", self.max_z_pairs / self.bound_z if self.bound_z else 0.0),
            ("count_overlap_k", self.max_k_count, "3", self.max_k_count / 3),
            ("count_overlap_rest", self.max_rest_count, "C (measured)", 1.0 if self.max_rest_count else 0.0),
            ("total_pairs", self.max_total, "18 C / beta",
             self.max_total / (18 * c * beta_inv) if beta_inv else 0.0),
        ]
        if self.max_doubled_total:
            rows.append(("doubled_pairs", self.max_doubled_total, "3^3 18 C / beta",
                         self.max_doubled_total / (27 * 18 * c * beta_inv)))
        return rows


def sum_bounding_box(engine: OverlapEngine) -> tuple[np.ndarray, np.ndarray]:
    b = engine.boxes
    ends = b.base + b.slope * (b.xhi - b.xlo)[None, :]
    ylo = float(np.minimum(b.base, ends).min()) - b.half_width
    yhi = float(np.maximum(b.base, ends).max()) + b.half_width
    beta = engine.tileset.params.beta
    zlo = 2 * b.n_values[0] * beta
    zhi = 2 * (b.n_values[-1] + 1) * beta
    return (np.array([2 * b.xlo.min(), 2 * ylo, zlo]), np.array([2 * b.xhi.max(), 2 * yhi, zhi]))


def sample_sum_points(engine: OverlapEngine, count: int, seed: int) -> np.ndarray:
    """Quasi-random points: half uniform in the bounding box, half sums of two tile points."""
    lo, hi = sum_bounding_box(engine)
    n_box = count // 2
    u = halton(3, n_box, seed)
    box = lo + u * (hi - lo)
    n_sum = count - n_box
    if n_sum == 0:
        return box
    from .decomposition import sample_cone_points

    p1 = sample_cone_points(engine.tileset, n_sum, seed + 1)
    p2 = sample_cone_points(engine.tileset, n_sum, seed + 2)
    rng = np.random.default_rng(seed)
    p2 = p2[rng.permutation(n_sum)]
    return np.vstack([box, p1 + p2])


def audit_overlap_global(engine: OverlapEngine, sample_count: int, seed: int,
                         doubled: bool = False, points: np.ndarray | None = None) -> OverlapReport:
    """Sweep sampled points and record the maxima of every overlap counter."""
    if sample_count < 0:
        raise InputError("sample_count must be >= 0")
    beta = engine.tileset.params.beta
    rep = OverlapReport(sample_count, bound_z=3 / beta, bound_total_shape=18 / beta)
    if sample_count == 0:
        return rep
    pts = sample_sum_points(engine, sample_count, seed) if points is None else points
    for pt in pts:
        c = point_counts(engine, pt, doubled)
        tp = tuple(float(v) for v in pt)
        for name, val in (("z_pairs", c.z_pairs), ("k_count", c.k_count), ("rest_count", c.rest_count),
                          ("total", c.total), ("doubled_total", c.doubled_total)):
            if val > getattr(rep, "max_" + name):
                setattr(rep, "max_" + name, val)
                rep.witnesses[name] = tp
        rep.violations_z += c.z_pairs > rep.bound_z
        rep.violations_k += c.k_count > 3
    return rep


@dataclass
class ScalingFit:
    x: list[float]
    y: list[float]
    slope: float
    intercept: float


def loglog_fit(x, y) -> ScalingFit:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return ScalingFit(list(map(float, x)), list(map(float, y)), float(slope), float(intercept))


def fit_beta_scaling(model, delta: float, betas, sample_count: int, seed: int,
                     exact: bool = False) -> ScalingFit:
    """Slope of log(max total pair count) against log(1/beta) at fixed delta."""
    from .decomposition import DecompositionParams, build_decomposition

    inv, tot = [], []
    for beta in betas:
        ts = build_decomposition(model, DecompositionParams(delta, beta, model.m))
        rep = audit_overlap_global(OverlapEngine(ts, exact=exact), sample_count, seed)
        inv.append(1 / beta)
        tot.append(max(rep.max_total, 1))
    return loglog_fit(inv, tot)


# ---------------------------------------------------------------- step quantities

def delta_quantity(m: int, l: int, lp: int, i: int, ip: int) -> float:
    """2^{l'(m/2-1)} (2^l + i 2^{l(1-m/2)} - 2^{l'} - i' 2^{l'(1-m/2)})."""
    # expanded so that identical indices give exactly 0 and l = l' gives exactly i - i'
    h = m / 2 - 1
    return 2.0 ** (lp * h) * (2.0**l - 2.0**lp) + i * 2.0 ** ((lp - l) * h) - ip


@dataclass
class ProjectionReport:
    diam_P: float
    diam_Q: float
    bound_P: float
    ratio: float


def projection_diameters(engine: OverlapEngine, k: int, n: int, target,
                         thickness: float | None = None) -> ProjectionReport:
    """Diameters of P = y - x Phi_n'(x_k) and Q = y over the target tile's outer box.

    x_k is the left end of level k; ``thickness`` overrides the box half-width.
    """
    ts = engine.tileset
    l, i, p = target
    if not ts.has(target) or n not in ts.n_range:
        raise InputError("invalid tile index")
    xk = ts.params.level_bounds(k)[0]
    slope_k = float(phi_n(ts.model, n * ts.params.beta, xk, 1))
    cell = ts.cell_id(l, i)
    b = engine.boxes
    pos = p - ts.n_range.start
    c, s = b.base[pos, cell], b.slope[pos, cell]
    w = b.half_width if thickness is None else thickness
    lo, hi = b.xlo[cell], b.xhi[cell]
    xs = np.array([lo, lo, hi, hi])
    ys = c + s * (xs - lo) + np.array([-w, w, -w, w])
    P = ys - xs * slope_k
    dP, dQ = float(P.max() - P.min()), float(ys.max() - ys.min())
    m, delta = ts.model.m, ts.params.delta
    if l == k:
        bound = delta * 2.0 ** (k * m / 2)
    else:
        bound = delta * 2.0 ** (k * (m - 1) - l * (m / 2 - 1))
    return ProjectionReport(dP, dQ, bound, dP / bound)


def diam_sum_inequality_check(functional, U, V, members, witness=None) -> tuple[float, float, bool]:
    """Check a + b <= sum_i diam P(U_i) + diam P(V_i) when U1+V1 and U2+V2 intersect.

    ``U`` and ``V`` are pairs of vertex arrays (P is linear, so diameters are
    attained at vertices). ``members`` = (x1, x2, y1, y2) with x_i in U_i and
    y_i in V_i gives a = P(x2) - P(x1) and b = P(y2) - P(y1). ``witness`` =
    (u1, v1, u2, v2) with u1 + v1 = u2 + v2 certifies the intersection.
    """
    if witness is None:
        raise PreconditionError("no intersection witness supplied")
    u1, v1, u2, v2 = (np.asarray(x, float) for x in witness)
    if not np.allclose(u1 + v1, u2 + v2, atol=1e-12):
        raise PreconditionError("witness does not certify an intersection: u1 + v1 != u2 + v2")
    P = functional
    x1, x2, y1, y2 = (np.asarray(x, float) for x in members)
    a = P(x2) - P(x1)
    b = P(y2) - P(y1)

    def diam(region):
        vals = [P(np.asarray(r, float)) for r in region]
        return max(vals) - min(vals)

    rhs = diam(U[0]) + diam(U[1]) + diam(V[0]) + diam(V[1])
    return float(a + b), float(rhs), bool(a + b <= rhs + 1e-12)


# ---------------------------------------------------------------- step audit

@dataclass
class StepAudit:
    max_delta: float = 0.0
    max_delta_far: float = 0.0
    c1: int = 0
    c2: int = 0
    pairs: int = 0


def step_audit(engine: OverlapEngine, points) -> StepAudit:
    """Measure the residual-count quantities on pairs sharing a point and a (k, n, p) triple.

    For two hits (k, j, n; l, i, p) and (k, j', n; l', i', p) at the same point, the
    pair is oriented so that l' <= l; we record the largest |Delta_{l l' i i'}|, the
    smallest c1 making the level/index trichotomy hold, and the largest |j - j'|.
    """
    ts = engine.tileset
    m = ts.model.m
    lv, jj = engine.boxes.level, engine.boxes.jidx
    out = StepAudit()
    for pt in points:
        h = engine.z_window_hits(pt)
        if len(h) < 2:
            continue
        key = (h.n * 1_000_003 + h.p) * 64 + lv[h.c1]
        order = np.argsort(key, kind="stable")
        key = key[order]
        c1s, c2s = h.c1[order], h.c2[order]
        bounds = np.flatnonzero(np.diff(key)) + 1
        for grp in np.split(np.arange(key.size), bounds):
            if grp.size < 2:
                continue
            k = int(lv[c1s[grp[0]]])
            js = jj[c1s[grp]]
            ls, is_ = lv[c2s[grp]], jj[c2s[grp]]
            for a in range(grp.size):
                for b in range(a + 1, grp.size):
                    l, i, j = int(ls[a]), int(is_[a]), int(js[a])
                    lp, ip, jp = int(ls[b]), int(is_[b]), int(js[b])
                    if (lp, ip) > (l, i):
                        l, i, j, lp, ip, jp = lp, ip, jp, l, i, j
                    out.pairs += 1
                    d = abs(delta_quantity(m, l, lp, i, ip))
                    out.max_delta = max(out.max_delta, d)
                    if l < k - 2:
                        out.max_delta_far = max(out.max_delta_far, d)
                    out.c1 = max(out.c1, _trichotomy_constant(m, l, lp, i, ip))
                    out.c2 = max(out.c2, abs(j - jp))
    return out


def _trichotomy_constant(m: int, l: int, lp: int, i: int, ip: int) -> int:
    """Smallest c with one of the three level/index alternatives holding."""
    cands = [max(l, lp)]
    if lp == l:
        cands.append(abs(i - ip))
    if lp == l - 1:
        top = math.ceil(2.0 ** (lp * m / 2) - 1e-9)
        cands.append(max(i, top - ip))
    return int(min(cands))
