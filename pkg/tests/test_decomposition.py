from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from restriktor.curve import CurveModel
from restriktor.cutoff import ETA_INTEGRAL, eta, eta_wide
from restriktor.decomposition import (
    DecompositionParams,
    bump_eval,
    build_decomposition,
    doubled_tile,
    in_enlarged_tile,
    sample_cone_points,
    tile_membership,
)
from restriktor.errors import InputError


def tiles(m, delta, beta=None, chi=(1,)):
    beta = delta if beta is None else beta
    return build_decomposition(CurveModel(m, chi), DecompositionParams(delta, beta, m))


def test_single_level_quartic():
    ts = tiles(4, 2.0**-4)
    assert ts.params.gamma == pytest.approx(0.5)
    assert ts.levels == [0]
    assert ts.params.gamma_k(0) == pytest.approx(0.5)


def test_two_level_quartic():
    ts = tiles(4, 2.0**-8)
    assert ts.params.gamma == pytest.approx(0.25)
    assert ts.levels == [0, 1]
    assert ts.params.gamma_k(1) == pytest.approx(1 / 8)
    assert ts.params.lateral_count(1) == 4


def test_first_cell_of_cubic():
    ts = tiles(3, 2.0**-3)
    c = ts.cell(0, 0)
    assert c.x_lo == 0
    assert c.gamma_k == pytest.approx(0.5)


def test_cells_tile_the_covered_interval():
    for m, e in [(3, 6), (3, 9), (4, 8), (4, 11)]:
        ts = tiles(m, 2.0**-e)
        xs = sorted((c.x_lo, c.x_hi) for c in ts.cells)
        assert xs[0][0] == 0
        for (a, b), (c, d) in zip(xs, xs[1:]):
            assert b == pytest.approx(c, abs=1e-12)
        assert ts.x_cover <= 1.0


def test_parameter_validation():
    with pytest.raises(InputError):
        DecompositionParams(1.0, 0.5, 3)
    with pytest.raises(InputError):
        DecompositionParams(2.0**-4, 0.3, 3)
    with pytest.raises(InputError):
        DecompositionParams(2.0**-6, 2.0**-4, 3)
    with pytest.raises(InputError):
        build_decomposition(CurveModel(3), DecompositionParams(2.0**-4, 2.0**-4, 4))


def test_membership_examples():
    ts = tiles(4, 2.0**-6)
    n = ts.n_range.start
    tile = ts[(0, 0, n)]
    assert tile_membership(tile, (0.0, 0.0, 1.0))
    assert not tile_membership(tile, (0.0, 0.0, 0.5))
    assert not tile_membership(tile, (0.0, 1.5 * ts.params.delta, 1.0))


@pytest.mark.parametrize("m,e,chi", [(3, 6, (1,)), (4, 8, (1,)), (4, 7, (1, Fraction(1, 2)))])
def test_tiles_partition_sampled_cone(m, e, chi):
    ts = tiles(m, 2.0**-e, chi=chi)
    pts = sample_cone_points(ts, 3000, seed=3)
    counts = [len(ts.locate(p)) for p in pts]
    assert set(counts) == {1}


def test_cutoff_values():
    assert eta(0.0) == 1.0
    assert eta(1.0) == 1.0
    assert eta(1.25) == 0.0
    assert eta(1.125) == pytest.approx(0.5)
    assert eta_wide(1.5) == pytest.approx(0.5)
    assert eta_wide(2.0) == 0.0
    t = np.linspace(-2, 2, 400001)
    assert np.trapezoid(eta(t), t) == pytest.approx(ETA_INTEGRAL, rel=1e-8)


def test_bump_examples():
    ts = tiles(4, 2.0**-6)
    n = ts.n_range.start
    tile = ts[(1, 1, n)]
    xc = tile.x_lo + 0.5 * tile.gamma_k
    zc = tile.z_lo + 0.5 * tile.beta
    yc = zc * (float(ts.model.poly(xc / zc)) + 0.5 * tile.delta)
    assert bump_eval(tile, (xc, yc, zc)) == 1.0
    assert bump_eval(tile, (tile.x_lo + 2 * tile.gamma_k, yc, zc)) == 0.0
    x = tile.x_lo + 1.125 * tile.gamma_k
    y = zc * (float(ts.model.poly(x / zc)) + 0.5 * tile.delta)
    assert bump_eval(tile, (x, y, zc)) == pytest.approx(0.5)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_bump_support_inside_enlarged_tile(u, v, w):
    ts = tiles(3, 2.0**-6)
    tile = ts[(1, 0, ts.n_range.start + 3)]
    x = tile.x_lo + 2.5 * u * tile.gamma_k
    z = tile.z_lo + 2.5 * w * tile.beta
    y = z * (float(ts.model.poly(x / z)) + 2.5 * v * tile.delta)
    val = bump_eval(tile, (x, y, z))
    assert 0.0 <= val <= 1.0
    if val > 0:
        assert in_enlarged_tile(tile, (x, y, z))
    if tile_membership(tile, (x, y, z)):
        assert val == pytest.approx(1.0)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_width_law_keeps_sag_comparable_to_delta(m):
    # deviation of Phi from its chord over a full cell is delta times a constant
    for e in range(4, 13):
        ts = tiles(m, 2.0**-e, chi=(1, Fraction(1, 2)))
        for c in ts.cells:
            if c.x_hi - c.x_lo < 0.99 * c.gamma_k:
                continue
            x = np.linspace(c.x_lo, c.x_hi, 65)
            f = ts.model.poly(x)
            chord = f[0] + (f[-1] - f[0]) * (x - x[0]) / (x[-1] - x[0])
            sag = np.max(chord - f) / ts.params.delta
            assert 0.25 <= sag <= m * (m - 1) * 2 ** (m - 2) / 4


def test_doubled_tile_part_counts():
    ts = tiles(4, 2.0**-8)
    n = ts.n_range.start + 1
    assert len(doubled_tile(ts, (1, 1, n))) == 27
    assert len(doubled_tile(ts, (1, 0, n))) == 18


def test_doubled_tile_contains_its_tile():
    ts = tiles(4, 2.0**-8)
    alpha = (1, 1, ts.n_range.start + 1)
    g = doubled_tile(ts, alpha)
    pts = sample_cone_points(ts, 4000, seed=1)
    inside = [p for p in pts if tile_membership(ts[alpha], p)]
    assert inside
    assert all(g.contains(p) for p in inside)


def test_unknown_tile_index():
    ts = tiles(4, 2.0**-8)
    with pytest.raises(InputError):
        ts[(0, 0, 0)]
    with pytest.raises(InputError):
        doubled_tile(ts, (5, 0, ts.n_range.start))
