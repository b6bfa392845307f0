"""Exact planar convex geometry over the rationals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InputError, PreconditionError

Point = tuple[Fraction, Fraction]


def q(value) -> Fraction:
    """Exact rational from int, Fraction, str or float (floats via their shortest repr)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InputError("non-finite coordinate")
        return Fraction(repr(value))
    return Fraction(value)


def _pt(p) -> Point:
    return (q(p[0]), q(p[1]))


def cross(o: Point, a: Point, b: Point) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable) -> tuple[Point, ...]:
    """Counterclockwise hull without collinear or repeated vertices (monotone chain)."""
    pts = sorted(set(_pt(p) for p in points))
    if len(pts) <= 2:
        return tuple(pts)
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon with counterclockwise exact rational vertices.

    Fewer than three vertices encode degenerate (empty, point or segment) sets of area 0.
    """

    vertices: tuple[Point, ...]

    def __post_init__(self):
        vs = tuple(_pt(v) for v in self.vertices)
        if len(set(vs)) != len(vs):
            raise InputError("repeated vertex")
        n = len(vs)
        if n >= 3:
            for i in range(n):
                if cross(vs[i], vs[(i + 1) % n], vs[(i + 2) % n]) < 0:
                    raise InputError("vertices are not in convex counterclockwise order")
        object.__setattr__(self, "vertices", vs)

    @classmethod
    def from_points(cls, points: Iterable) -> "ConvexPolygon":
        return cls(convex_hull(points))

    def __len__(self) -> int:
        return len(self.vertices)

    def area(self) -> Fraction:
        vs = self.vertices
        if len(vs) < 3:
            return Fraction(0)
        s = Fraction(0)
        for i in range(len(vs)):
            x0, y0 = vs[i]
            x1, y1 = vs[(i + 1) % len(vs)]
            s += x0 * y1 - x1 * y0
        return s / 2

    def translate(self, z) -> "ConvexPolygon":
        zx, zy = _pt(z)
        return ConvexPolygon(tuple((x + zx, y + zy) for x, y in self.vertices))

    def scale(self, t) -> "ConvexPolygon":
        t = q(t)
        if t == 0:
            return ConvexPolygon(((Fraction(0), Fraction(0)),)) if self.vertices else self
        if t < 0:
            return self.negate().scale(-t)
        return ConvexPolygon(tuple((t * x, t * y) for x, y in self.vertices))

    def negate(self) -> "ConvexPolygon":
        return ConvexPolygon(tuple((-x, -y) for x, y in self.vertices))

    def shear(self, s) -> "ConvexPolygon":
        """Image under (x, y) -> (x, y - s x), an area-preserving map."""
        s = q(s)
        return ConvexPolygon(tuple((x, y - s * x) for x, y in self.vertices))

    def is_symmetric(self) -> bool:
        return set(self.vertices) == {(-x, -y) for x, y in self.vertices}

    def contains(self, p) -> bool:
        p = _pt(p)
        vs = self.vertices
        if len(vs) >= 3:
            return all(cross(vs[i], vs[(i + 1) % len(vs)], p) >= 0 for i in range(len(vs)))
        if len(vs) == 2:
            a, b = vs
            return cross(a, b, p) == 0 and min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) \
                and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
        return len(vs) == 1 and vs[0] == p

    def centroid_vertex_mean(self) -> Point:
        n = len(self.vertices)
        return (sum(v[0] for v in self.vertices) / n, sum(v[1] for v in self.vertices) / n)


def make_slab(gamma, delta, slope, center=(0, 0)) -> ConvexPolygon:
    """{|x - cx| <= gamma/2, |y - cy - slope (x - cx)| <= delta/2} as an exact parallelogram."""
    g, d, s = q(gamma), q(delta), q(slope)
    if g <= 0 or d <= 0:
        raise InputError("slab dimensions must be positive")
    cx, cy = _pt(center)
    hx, hy = g / 2, d / 2
    return ConvexPolygon((
        (cx - hx, cy - s * hx - hy),
        (cx + hx, cy + s * hx - hy),
        (cx + hx, cy + s * hx + hy),
        (cx - hx, cy - s * hx + hy),
    ))


def _clip(poly: list[Point], a: Point, b: Point) -> list[Point]:
    """Keep the part of ``poly`` left of the directed line a -> b."""
    out: list[Point] = []
    n = len(poly)
    for i in range(n):
        cur, nxt = poly[i], poly[(i + 1) % n]
        c1, c2 = cross(a, b, cur), cross(a, b, nxt)
        if c1 >= 0:
            out.append(cur)
        if (c1 > 0 and c2 < 0) or (c1 < 0 and c2 > 0):
            t = c1 / (c1 - c2)
            out.append((cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])))
    return out


def intersection(P1: ConvexPolygon, P2: ConvexPolygon) -> ConvexPolygon:
    if len(P1) < 3 or len(P2) < 3:
        pts = [v for v in P1.vertices if P2.contains(v)] + [v for v in P2.vertices if P1.contains(v)]
        return ConvexPolygon.from_points(pts)
    poly = list(P1.vertices)
    vs = P2.vertices
    for i in range(len(vs)):
        if not poly:
            break
        poly = _clip(poly, vs[i], vs[(i + 1) % len(vs)])
    return ConvexPolygon.from_points(poly)


def intersection_area(P1: ConvexPolygon, P2: ConvexPolygon) -> Fraction:
    """Exact area of P1 intersected with P2 (Sutherland-Hodgman clipping)."""
    return intersection(P1, P2).area()


def _start_index(vs: Sequence[Point]) -> int:
    return min(range(len(vs)), key=lambda i: (vs[i][1], vs[i][0]))


def minkowski_sum(P1: ConvexPolygon, P2: ConvexPolygon) -> ConvexPolygon:
    """Exact Minkowski sum by merging the edge sequences in angular order."""
    if not P1.vertices or not P2.vertices:
        return ConvexPolygon(())
    if len(P1) < 3 or len(P2) < 3:
        return ConvexPolygon.from_points(
            (a[0] + b[0], a[1] + b[1]) for a in P1.vertices for b in P2.vertices)
    A, B = P1.vertices, P2.vertices
    ia, ib = _start_index(A), _start_index(B)
    A = A[ia:] + A[:ia]
    B = B[ib:] + B[:ib]
    na, nb = len(A), len(B)
    out = []
    i = j = 0
    while i < na or j < nb:
        out.append((A[i % na][0] + B[j % nb][0], A[i % na][1] + B[j % nb][1]))
        ea = (A[(i + 1) % na][0] - A[i % na][0], A[(i + 1) % na][1] - A[i % na][1])
        eb = (B[(j + 1) % nb][0] - B[j % nb][0], B[(j + 1) % nb][1] - B[j % nb][1])
        c = ea[0] * eb[1] - ea[1] * eb[0]
        if j >= nb or (i < na and c > 0):
            i += 1
        elif i >= na or c < 0:
            j += 1
        else:
            i += 1
            j += 1
    return ConvexPolygon.from_points(out)


@dataclass(frozen=True)
class Paralleloid:
    """Prism base x [z_offset, z_offset + height] over a parallelogram base."""

    base: ConvexPolygon
    height: float
    z_offset: float = 0.0

    def __post_init__(self):
        vs = self.base.vertices
        if len(vs) != 4:
            raise InputError("paralleloid base must have exactly 4 vertices")
        if (vs[1][0] - vs[0][0], vs[1][1] - vs[0][1]) != (vs[2][0] - vs[3][0], vs[2][1] - vs[3][1]):
            raise InputError("paralleloid base is not a parallelogram")
        if not self.height > 0:
            raise InputError("height must be positive")

    @classmethod
    def from_slab(cls, gamma, delta, slope, beta, center=(0, 0), z_offset=0.0) -> "Paralleloid":
        return cls(make_slab(gamma, delta, slope, center), float(beta), float(z_offset))

    @property
    def edges(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """(e, f) with vertex v0 and base = {v0 + a e + b f : a, b in [0, 1]}."""
        v0, v1, _, v3 = self.base.vertices
        e = (float(v1[0] - v0[0]), float(v1[1] - v0[1]))
        f = (float(v3[0] - v0[0]), float(v3[1] - v0[1]))
        return e, f

    @property
    def origin(self) -> tuple[float, float]:
        v0 = self.base.vertices[0]
        return float(v0[0]), float(v0[1])

    @property
    def width(self) -> float:
        xs = [float(v[0]) for v in self.base.vertices]
        return max(xs) - min(xs)

    @property
    def slope(self) -> float:
        e, f = self.edges
        long = e if abs(e[0]) >= abs(f[0]) else f
        return long[1] / long[0]

    @property
    def thickness(self) -> float:
        """Vertical thickness: area divided by width."""
        return float(self.base.area()) / self.width

    def volume(self) -> float:
        return float(self.base.area()) * self.height

    def sheared(self, s) -> "Paralleloid":
        return Paralleloid(self.base.shear(s), self.height, self.z_offset)


def slab_angle(m1, m2) -> tuple[float, float]:
    """(|arctan m1 - arctan m2|, |m1 - m2|)."""
    return abs(math.atan(float(m1)) - math.atan(float(m2))), abs(float(m1) - float(m2))


def symmetric_intersection_dominance(K: ConvexPolygon, L: ConvexPolygon, z):
    """(|K cap (z + L)|, |K cap L|, lhs <= rhs) for origin-symmetric K, L."""
    if not K.is_symmetric():
        raise PreconditionError("K is not symmetric about the origin")
    if not L.is_symmetric():
        raise PreconditionError("L is not symmetric about the origin")
    lhs = intersection_area(K, L.translate(z))
    rhs = intersection_area(K, L)
    return lhs, rhs, lhs <= rhs


def dominance_proof_replay(K: ConvexPolygon, L: ConvexPolygon, z) -> tuple[bool, bool]:
    """For A = (L+z) cap K and B = (L-z) cap K: (A + B)/2 inside K cap L, and |A| = |B|."""
    zx, zy = _pt(z)
    A = intersection(L.translate((zx, zy)), K)
    B = intersection(L.translate((-zx, -zy)), K)
    KL = intersection(K, L)
    if not A.vertices or not B.vertices:
        return True, A.area() == B.area()
    mid = minkowski_sum(A, B).scale(Fraction(1, 2))
    inside = all(KL.contains(v) for v in mid.vertices)
    return inside, A.area() == B.area()


def brunn_minkowski_check(K0: ConvexPolygon, K1: ConvexPolygon, t, tol: float = 1e-12):
    """((1-t)|K0|^(1/2) + t|K1|^(1/2), |(1-t)K0 + t K1|^(1/2), lhs <= rhs + tol)."""
    t = q(t)
    if not 0 <= t <= 1:
        raise InputError("t must lie in [0, 1]")
    if t == 0:
        Kt = K0
    elif t == 1:
        Kt = K1
    else:
        Kt = minkowski_sum(K0.scale(1 - t), K1.scale(t))
    lhs = float(1 - t) * math.sqrt(K0.area()) + float(t) * math.sqrt(K1.area())
    rhs = math.sqrt(Kt.area())
    return lhs, rhs, lhs <= rhs + tol


def slab_sum_area(gamma1, gamma2, delta, m1, m2) -> Fraction:
    """Closed form |A1 + A2| = 2 gamma1 delta + 2 gamma2 delta + gamma1 gamma2 |m1 - m2|."""
    g1, g2, d = q(gamma1), q(gamma2), q(delta)
    return 2 * g1 * d + 2 * g2 * d + g1 * g2 * abs(q(m1) - q(m2))
