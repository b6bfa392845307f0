from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from restriktor.curve import CurveModel
from restriktor.decomposition import DecompositionParams, build_decomposition
from restriktor.errors import GridRefusal, InputError
from restriktor.fields import (
    SampledField,
    check_region,
    convolution_bound,
    convolve,
    exponent_s,
    korfuenf_bound,
    ls_norm,
    sample_bump,
    s_one_closed_form,
    tile_angle,
    tile_paralleloid,
    verify_convolution_bound,
    verify_korfuenf,
    verify_vereinigung,
)
from restriktor.geometry import Paralleloid


def tiles(m, e):
    d = 2.0**-e
    return build_decomposition(CurveModel(m), DecompositionParams(d, d, m))


def test_paralleloid_bump_values_and_mass():
    P = Paralleloid.from_slab(F(1, 4), F(1, 32), F(1, 2), 1 / 32, (0, 0), 1.0)
    f = sample_bump(P, 1 / 512)
    assert f.values.max() == pytest.approx(1.0)
    assert f.values.min() == 0.0
    # each plateau-1 cutoff integrates to 9/8 of its side
    assert f.integral() == pytest.approx((9 / 8) ** 3 * P.volume(), rel=1e-3)


def test_tile_bump_mass():
    ts = tiles(4, 8)
    tile = ts[(1, 1, 300)]
    f = sample_bump(tile, tile.delta / 8)
    # eta((x-x_kj)/gamma_k) eta((y/z-Phi)/delta) eta((z-z_n)/beta) integrates to 2.25^3 gamma_k delta beta z_n
    assert f.integral() == pytest.approx(2.25**3 * tile.gamma_k * tile.delta * tile.beta * tile.z_lo, rel=1e-6)


def test_coarse_grid_is_refused():
    ts = tiles(4, 8)
    tile = ts[(1, 1, 300)]
    with pytest.raises(GridRefusal):
        sample_bump(tile, tile.delta / 4)
    P = tile_paralleloid(ts, (1, 1, 300))
    with pytest.raises(GridRefusal):
        sample_bump(P, P.thickness / 16, max_cells=1000)


def test_box_convolution_is_triangle():
    h = 0.01
    box = SampledField((0.0,), h, np.ones(101))
    c = convolve(box, box)
    x = c.axis(0)
    tri = np.clip(1.01 - np.abs(x - 1.0), 0, None)
    np.testing.assert_allclose(c.values, tri, atol=1e-12)


def test_direct_and_fft_paths_agree():
    rng = np.random.default_rng(0)
    f = SampledField((0.0, 0.0, 0.0), 0.1, rng.random((12, 12, 12)))
    g = SampledField((1.0, 0.0, -1.0), 0.1, rng.random((12, 12, 12)))
    a = convolve(f, g, "fft")
    b = convolve(f, g, "direct")
    assert a.origin == pytest.approx((1.0, 0.0, -1.0))
    assert np.max(np.abs(a.values - b.values)) <= 1e-9 * np.max(np.abs(b.values))


def test_sup_of_convolution_bounded_by_overlap():
    ts = tiles(4, 8)
    n = ts.n_range.start
    P1 = tile_paralleloid(ts, (1, 0, n)).sheared(0.0)
    P2 = tile_paralleloid(ts, (1, 2, n))
    h = min(P1.thickness, P1.height) / 8
    f, g = sample_bump(P1, h), sample_bump(P2, h)
    c = convolve(f, g)
    # |f * g| <= ||f||_inf ||g||_inf min(|supp f|, |supp g|)
    supp = min(np.count_nonzero(f.values), np.count_nonzero(g.values)) * f.cell
    assert ls_norm(c, math.inf) <= supp * (1 + 1e-12)


def test_ls_norm_examples():
    vals = np.zeros((4, 4, 4))
    vals[:2, :3, :1] = 1
    f = SampledField((0.0, 0.0, 0.0), 0.5, vals)
    for s in (1.0, 2.0, 3.5):
        assert ls_norm(f, s) == pytest.approx((6 * 0.125) ** (1 / s))
    with pytest.raises(InputError):
        ls_norm(f, 0.5)


@given(st.integers(0, 2**31), st.floats(-5, 5).filter(lambda c: c == 0 or abs(c) > 1e-100), st.floats(1, 4))
def test_ls_norm_homogeneous_and_holder(seed, c, s):
    rng = np.random.default_rng(seed)
    f = SampledField((0.0, 0.0), 0.25, rng.normal(size=(6, 7)))
    g = SampledField((0.0, 0.0), 0.25, rng.normal(size=(6, 7)))
    assert ls_norm(f.scaled(c), s) == pytest.approx(abs(c) * ls_norm(f, s), rel=1e-12, abs=1e-300)
    fg = SampledField((0.0, 0.0), 0.25, f.values * g.values)
    assert ls_norm(fg, 1) <= ls_norm(f, 2) * ls_norm(g, 2) * (1 + 1e-12)


def test_convolution_bound_at_zero_angle():
    P = Paralleloid.from_slab(F(1, 4), F(1, 64), F(1, 3), 1 / 64)
    for s in (1.0, 1.5, 2.0):
        r = verify_convolution_bound(P, P, s)
        assert r.alpha == 0
        # denominator is 1 at zero angle: (beta delta)^{s+1} gamma^s gamma
        assert r.bound == pytest.approx((1 / 64 * 1 / 64) ** (s + 1) * 0.25**s * 0.25)
        assert r.converged


def test_s_one_bound_is_angle_free():
    a = convolution_bound(0.1, 0.01, 0.5, 0.25, 0.0, 1)
    b = convolution_bound(0.1, 0.01, 0.5, 0.25, 1.3, 1)
    assert a == b == pytest.approx((0.1 * 0.01) ** 2 * 0.25 * 0.5)


def test_s_one_closed_form_matches_grid():
    ts = tiles(4, 8)
    n = ts.n_range.start
    P1, P2 = tile_paralleloid(ts, (1, 0, n)), tile_paralleloid(ts, (0, 0, n + 5))
    r = verify_convolution_bound(P1, P2, 1.0)
    assert r.computed == pytest.approx(s_one_closed_form(P1, P2), rel=1e-6)


def test_convolution_ratio_far_levels_quartic():
    # frozen grid value, h = delta/8 with the h/2 check, m=4, delta=beta=2^-12, (k,l)=(2,0)
    ts = tiles(4, 12)
    n = ts.n_range.start
    P1, P2 = tile_paralleloid(ts, (2, 0, n)), tile_paralleloid(ts, (0, 0, n))
    r = verify_convolution_bound(P1, P2, 1.5, h=ts.params.delta / 8)
    assert r.converged
    assert r.ratio == pytest.approx(1.8902, rel=1e-3)


def test_slope_limit_and_exponent_errors():
    P = Paralleloid.from_slab(F(1, 4), F(1, 64), 40, 1 / 64)
    with pytest.raises(InputError):
        verify_convolution_bound(P, P, 1.5)
    Q = Paralleloid.from_slab(F(1, 4), F(1, 64), 0, 1 / 64)
    with pytest.raises(InputError):
        verify_convolution_bound(Q, Q, 0.5)


def test_tile_angle_examples():
    ts = tiles(4, 8)
    a = (1, 2, 256)
    assert tile_angle(ts, a, a) == (0.0, 0.0)
    gap, ang = tile_angle(ts, (1, 0, 256), (0, 0, 256))
    # Phi_n'(x) = 4 x^3 at n beta = 1: x_10 = 1/4 gives 1/16, x_00 = 0 gives 0
    assert gap == pytest.approx(1 / 16)
    assert ang == pytest.approx(math.atan(1 / 16))


def test_tile_angle_tracks_power_law():
    ts = tiles(3, 12)
    n = ts.n_range.start
    g = ts.params.gamma
    for k in (2, 3):
        gap, _ = tile_angle(ts, (k, 0, n), (0, 0, n))
        ratio = gap / (2**k * g) ** 2
        assert 1 <= ratio <= 3 * 2


def test_korfuenf_far_levels_bound_formula():
    ts = tiles(3, 12)
    n = ts.n_range.start
    p = ts.params
    s, k, l, m = 1.5, 3, 0, 3
    expect = ((p.beta * p.delta * p.gamma) ** (s + 1) * 2.0 ** ((k + l) * (1 + s - s * m) / 2)
              * 2.0 ** (-abs(k - l) * (m - 1) * (s - 1) / 2))
    assert korfuenf_bound(ts, (k, 0, n), (l, 0, n), s) == pytest.approx(expect)
    r = verify_korfuenf(ts, (k, 0, n), (l, 0, n), s, h=p.delta / 8)
    assert r.case == "far" and r.converged
    assert r.ratio == pytest.approx(1.2365, rel=1e-3)


def test_korfuenf_same_tile_s_one():
    ts = tiles(3, 9)
    n = ts.n_range.start
    r = verify_korfuenf(ts, (2, 1, n), (2, 1, n), 1.0)
    assert r.hij == 0
    assert r.ratio == pytest.approx((9 / 8) ** 6, rel=1e-6)


def test_korfuenf_ratio_decreases_with_matching_distance():
    ts = tiles(3, 9)
    n = ts.n_range.start
    ratios = [verify_korfuenf(ts, (2, 0, n), (2, i, n), 1.5) for i in (0, 3, 7)]
    assert [r.hij for r in ratios] == [0, 3, 7]
    vals = [r.ratio for r in ratios]
    assert vals[0] > vals[1] > vals[2]


def test_vereinigung_single_spike_reduces():
    ts = tiles(3, 9)
    n = ts.n_range.start
    s, q = 1.5, 1 / 0.55
    a = np.zeros(len(ts.level_cells(2)))
    a[3] = 1
    b = np.zeros(len(ts.level_cells(1)))
    b[1] = 1
    rep = verify_vereinigung(ts, 2, 1, n, n, a, b, s, q)
    single = verify_korfuenf(ts, (2, 3, n), (1, 1, n), s, check_convergence=False)
    assert rep.lhs == pytest.approx(single.computed)


def test_vereinigung_holder_step():
    ts = tiles(3, 9)
    n = ts.n_range.start
    ones = np.ones(len(ts.level_cells(2)))
    rep = verify_vereinigung(ts, 2, 2, n, n + 1, ones, ones, 1.5, 1 / 0.55)
    assert rep.holder_lhs <= rep.holder_rhs * (1 + 1e-12)
    assert rep.ratio < 10


def test_region_and_exponent_errors():
    with pytest.raises(InputError, match=r"p' > m\+1"):
        check_region(4, 3.0, 2.0)
    with pytest.raises(InputError, match="3/p'"):
        check_region(4, 6.0, 1 / 0.4)
    with pytest.raises(InputError):
        check_region(4, 6.0, 1 / 0.9)
    check_region(4, 6.0, 1 / 0.55)
    assert exponent_s(6.0) == pytest.approx(1.5)
    with pytest.raises(InputError):
        exponent_s(2.0)
