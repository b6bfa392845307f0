from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from restriktor.errors import InputError, PreconditionError
from restriktor.experiments import random_polygon, random_symmetric_polygon
from restriktor.geometry import (
    ConvexPolygon,
    Paralleloid,
    brunn_minkowski_check,
    dominance_proof_replay,
    intersection_area,
    make_slab,
    minkowski_sum,
    slab_angle,
    slab_sum_area,
    symmetric_intersection_dominance,
)

SQUARE = ConvexPolygon.from_points([(-F(1, 2), -F(1, 2)), (F(1, 2), -F(1, 2)), (F(1, 2), F(1, 2)), (-F(1, 2), F(1, 2))])
rationals = st.fractions(-4, 4, max_denominator=16)
positive = st.fractions(F(1, 16), 4, max_denominator=16)


def box(a, b):
    return ConvexPolygon.from_points([(-a, -b), (a, -b), (a, b), (-a, b)])


def test_slab_examples():
    s = make_slab(2, F(1, 10), 0)
    assert set(s.vertices) == {(-1, -F(1, 20)), (1, -F(1, 20)), (1, F(1, 20)), (-1, F(1, 20))}
    assert make_slab(2, F(1, 10), 1).area() == F(1, 5)
    assert make_slab(1, 1, 0).area() == 1
    with pytest.raises(InputError):
        make_slab(0, 1, 0)


def test_floats_are_read_by_shortest_repr():
    assert make_slab(2, 0.1, 1).area() == F(1, 5)


def test_intersection_examples():
    assert intersection_area(SQUARE, SQUARE) == 1
    horiz = box(F(1, 2), F(1, 20))
    vert = box(F(1, 20), F(1, 2))
    assert intersection_area(horiz, vert) == F(1, 100)


@given(positive, st.fractions(-1, 1, max_denominator=32))
def test_small_angle_slab_inside_thicker_slab(gamma2, m):
    delta = F(1, 8)
    # the tilted slab stays inside the thick one while |m| gamma2 / 2 <= delta / 2
    if abs(m) * gamma2 > delta:
        m = delta / gamma2 * (1 if m >= 0 else -1)
    A1 = make_slab(4, 2 * delta, 0)
    A2 = make_slab(gamma2, delta, m)
    assert intersection_area(A1, A2) == delta * gamma2


@given(positive, st.fractions(-1, 1, max_denominator=32))
def test_equal_thickness_small_angle_overlap(gamma2, m):
    delta = F(1, 8)
    if abs(m) * gamma2 > 2 * delta:
        m = 2 * delta / gamma2 * (1 if m >= 0 else -1)
    got = intersection_area(make_slab(4, delta, 0), make_slab(gamma2, delta, m))
    assert got == delta * gamma2 - abs(m) * gamma2**2 / 4


def test_minkowski_examples():
    a = F(3, 7)
    s = minkowski_sum(box(a, a), box(a, a))
    assert s.area() == 16 * a * a
    g1, g2, d = F(2), F(1, 3), F(1, 10)
    s = minkowski_sum(make_slab(g1, d, 0), make_slab(g2, d, 0))
    assert s.area() == (g1 + g2) * 2 * d


@given(positive, positive, positive, st.fractions(-1, 1, max_denominator=16), st.fractions(-1, 1, max_denominator=16))
def test_slab_sum_closed_form(g1, g2, d, m1, m2):
    s = minkowski_sum(make_slab(g1, d, m1), make_slab(g2, d, m2))
    assert s.area() == slab_sum_area(g1, g2, d, m1, m2)
    if g2 <= g1:
        alpha, _ = slab_angle(m1, m2)
        ratio = float(s.area()) / (float(g1) * (float(d) + float(g2) * alpha))
        assert 1.0 <= ratio <= 4.0 + 1e-12


@given(st.integers(0, 2**31))
def test_minkowski_matches_pairwise_hull(seed):
    rng = np.random.default_rng(seed)
    P, Q = random_polygon(rng, 5, 8), random_polygon(rng, 5, 8)
    hull = ConvexPolygon.from_points((a[0] + b[0], a[1] + b[1]) for a in P.vertices for b in Q.vertices)
    assert minkowski_sum(P, Q) == hull


def test_dominance_examples():
    K = random_symmetric_polygon(np.random.default_rng(0))
    lhs, rhs, ok = symmetric_intersection_dominance(K, K, (0, 0))
    assert lhs == rhs and ok
    lhs, rhs, ok = symmetric_intersection_dominance(SQUARE, SQUARE, (F(1, 2), 0))
    assert (lhs, rhs, ok) == (F(1, 2), 1, True)


def test_dominance_needs_symmetry():
    tri = ConvexPolygon.from_points([(0, 0), (1, 0), (0, 1)])
    with pytest.raises(PreconditionError):
        symmetric_intersection_dominance(tri, SQUARE, (0, 0))
    with pytest.raises(PreconditionError):
        symmetric_intersection_dominance(SQUARE, tri, (0, 0))


@given(st.integers(0, 2**31), rationals, rationals)
def test_dominance_on_random_symmetric_pairs(seed, zx, zy):
    rng = np.random.default_rng(seed)
    K, L = random_symmetric_polygon(rng), random_symmetric_polygon(rng)
    z = (zx * 5, zy * 5)
    _, _, ok = symmetric_intersection_dominance(K, L, z)
    assert ok
    inside, equal = dominance_proof_replay(K, L, z)
    assert inside and equal


def test_brunn_minkowski_examples():
    K = random_polygon(np.random.default_rng(1))
    lhs, rhs, ok = brunn_minkowski_check(K, K, F(1, 3))
    assert ok and lhs == pytest.approx(rhs, rel=1e-14)
    lhs, rhs, ok = brunn_minkowski_check(K, SQUARE, 0)
    assert lhs == rhs
    thin = box(F(2), F(1, 100))
    lhs, rhs, ok = brunn_minkowski_check(SQUARE, thin, F(1, 2))
    # |(S + R)/2| = (1 + 4)(1 + 1/50)/4 exactly
    assert rhs == pytest.approx(math.sqrt(5 * F(51, 50) / 4))
    assert ok and lhs < rhs
    with pytest.raises(InputError):
        brunn_minkowski_check(K, K, 2)


@given(st.integers(0, 2**31), st.fractions(0, 1, max_denominator=64))
def test_brunn_minkowski_random(seed, t):
    rng = np.random.default_rng(seed)
    _, _, ok = brunn_minkowski_check(random_polygon(rng), random_polygon(rng), t)
    assert ok


def test_paralleloid_measurements():
    P = Paralleloid.from_slab(F(1, 2), F(1, 16), F(3, 4), 0.25)
    assert P.width == pytest.approx(0.5)
    assert P.thickness == pytest.approx(1 / 16)
    assert P.slope == pytest.approx(0.75)
    assert P.volume() == pytest.approx(0.5 / 16 * 0.25)
    assert P.sheared(F(3, 4)).slope == pytest.approx(0.0)
    with pytest.raises(InputError):
        Paralleloid(ConvexPolygon.from_points([(0, 0), (2, 0), (1, 1), (0, 1)]), 1.0)


def test_convex_polygon_rejects_bad_order():
    with pytest.raises(InputError):
        ConvexPolygon(((0, 0), (0, 1), (1, 0)))
