from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from restriktor.errors import InputError
from restriktor.lorentz import (
    StepFunction,
    decreasing_rearrangement,
    distribution_function,
    lorentz_holder_check,
    lorentz_norm,
    lp_norm,
    thickening_rearrangement_check,
    weight_weak_norm,
    weight_weak_norm_exact,
)

ONE = StepFunction(((2.0, 1.0),))
TWO = StepFunction(((1.0, 3.0), (2.0, 1.0)))

pieces = st.lists(st.tuples(st.floats(0.01, 5), st.floats(0.0, 10)), min_size=1, max_size=8)


def test_distribution_examples():
    assert distribution_function(ONE, 0.5) == 2
    assert distribution_function(ONE, 1) == 0
    assert distribution_function(TWO, 2) == 1


def test_rearrangement_examples():
    assert decreasing_rearrangement(ONE, 1) == 1
    assert decreasing_rearrangement(ONE, 2.5) == 0
    assert decreasing_rearrangement(TWO, 0.5) == 3
    assert decreasing_rearrangement(TWO, 1.5) == 1
    assert decreasing_rearrangement(StepFunction(), 0.3) == 0


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.5])
def test_indicator_norms(p):
    mu = 0.7
    f = StepFunction(((mu, 1.0),))
    assert lorentz_norm(f, p, 1) == pytest.approx(p * mu ** (1 / p))
    assert lorentz_norm(f, p, math.inf) == pytest.approx(mu ** (1 / p))


@given(pieces, st.floats(1.0, 5.0))
def test_lpp_is_lp(ps, p):
    f = StepFunction(tuple(ps))
    assert lorentz_norm(f, p, p, normalized=True) == pytest.approx(lp_norm(f, p), rel=1e-10, abs=1e-300)
    assert lorentz_norm(f, p, p) == pytest.approx(lp_norm(f, p), rel=1e-10, abs=1e-300)


@given(pieces, st.floats(1.0, 4.0))
def test_closed_form_matches_quadrature(ps, p):
    f = StepFunction(tuple(ps))
    q = 2.0
    # integrate (t^{1/p} f*(t))^q dt/t piecewise with a fine midpoint rule in log t
    v, T = f.levels()
    if v.size == 0:
        return
    total = 0.0
    prev = 0.0
    for vi, Ti in zip(v, T):
        if prev == 0.0:
            total += vi**q * p / q * Ti ** (q / p)
        else:
            s = np.linspace(math.log(prev), math.log(Ti), 4001)
            mid = 0.5 * (s[1:] + s[:-1])
            total += vi**q * np.sum(np.exp(mid * q / p)) * (s[1] - s[0])
        prev = Ti
    assert lorentz_norm(f, p, q) == pytest.approx(total ** (1 / q), rel=1e-5)


@given(pieces, st.floats(1.0, 4.0), st.floats(1.0, 4.0), st.floats(0.0, 4.0))
def test_normalized_norm_decreases_in_q(ps, p, q1, dq):
    f = StepFunction(tuple(ps))
    q2 = q1 + dq
    assert lorentz_norm(f, p, q2, normalized=True) <= lorentz_norm(f, p, q1, normalized=True) * (1 + 1e-10)


@pytest.mark.parametrize("s", [1, 2, 4])
def test_weight_weak_norm_ratio(s):
    for e in range(2, 12):
        delta = 2.0**-e
        lo, hi = weight_weak_norm(delta, s)
        assert lo <= weight_weak_norm_exact(delta, s) <= hi
        assert 1 <= lo / delta ** (1 / s) and hi / delta ** (1 / s) <= 2


def test_weight_weak_norm_scaling():
    for s in (1, 2, 4):
        a = weight_weak_norm_exact(2.0**-5, s)
        b = weight_weak_norm_exact(2.0**-6, s)
        assert b / a == pytest.approx(2 ** (-1 / s))
    lo, hi = weight_weak_norm(2.0**-6, 1)
    assert lo == pytest.approx(1.5 * 2.0**-6, rel=5e-2)
    assert hi == pytest.approx(1.5 * 2.0**-6, rel=5e-2)


def test_thickening_examples():
    g = StepFunction(((0.3, 1.0),))
    lhs, rhs, ok = thickening_rearrangement_check(g, 0.25, mode="support")
    assert lhs == rhs and ok
    two = StepFunction(((1.0, 2.0), (0.5, 1.0)))
    assert thickening_rearrangement_check(two, 1 / 8, 2)[2]


@given(pieces, st.integers(1, 12))
def test_thickening_holds_on_random_steps(ps, e):
    g = StepFunction(tuple(ps))
    lhs, rhs, ok = thickening_rearrangement_check(g, 2.0**-e)
    assert ok


def test_thickening_ratio_is_delta_independent():
    g = StepFunction(((1.0, 2.0), (0.5, 1.0), (3.0, 0.25)))
    ratios = []
    for e in range(2, 10):
        lhs, rhs, _ = thickening_rearrangement_check(g, 2.0**-e)
        ratios.append(lhs / rhs)
    assert max(ratios) - min(ratios) < 1e-12


def _aligned(rng, k=8):
    mu = rng.uniform(0.05, 2.0, k)
    return StepFunction.from_arrays(mu, rng.uniform(0, 3, k)), StepFunction.from_arrays(mu, rng.uniform(0, 3, k))


def test_holder_with_g_one_is_embedding():
    f = StepFunction(((1.0, 2.0), (0.5, 1.0)))
    one = StepFunction(((1.0, 1.0), (0.5, 1.0)))
    lhs, rhs, ok = lorentz_holder_check(f, one, (2, 2, 2, 2, math.inf, math.inf))
    assert ok


def test_holder_indicators_closed_form():
    mu = 0.75
    f = StepFunction(((mu, 1.0),))
    lhs, rhs, ok = lorentz_holder_check(f, f, (1, 1, 2, 2, 2, 2), constant=1.0)
    # ||1_E||_{1,1} = |E| and ||1_E||_{2,2} = |E|^{1/2}: equality case
    assert lhs == pytest.approx(mu)
    assert rhs == pytest.approx(mu)
    assert ok


def test_holder_random_trials_with_rearrangement_constant():
    rng = np.random.default_rng(2)
    for _ in range(300):
        f, g = _aligned(rng)
        q1 = rng.uniform(1.2, 6)
        r1 = 1 / rng.uniform(0.05, 1 - 1 / q1 - 0.01) if 1 - 1 / q1 > 0.06 else 20.0
        p1 = 1 / (1 / q1 + 1 / r1)
        q2 = rng.uniform(1, 6)
        r2 = rng.uniform(1, 6)
        p2 = 1 / (1 / q2 + 1 / r2)
        assert lorentz_holder_check(f, g, (p1, p2, q1, q2, r1, r2))[2]


def test_constant_free_holder_fails_in_general():
    # weak-type case: (fg)* = (9 on [0,2), 8 on [2,7)) so ||fg||_{1,inf} = 56, while
    # ||f||_{2,inf} = 6 and ||g||_{2,inf} = 4 sqrt(3)
    mu = [2.0, 3.0, 2.0]
    f = StepFunction.from_arrays(mu, [4.0, 2.0, 3.0])
    g = StepFunction.from_arrays(mu, [2.0, 4.0, 3.0])
    ex = (1, math.inf, 2, math.inf, 2, math.inf)
    lhs, rhs, ok = lorentz_holder_check(f, g, ex, constant=1.0)
    assert lhs == pytest.approx(56)
    assert rhs == pytest.approx(24 * math.sqrt(3))
    assert not ok
    assert lorentz_holder_check(f, g, ex)[2]


def test_constant_free_holder_on_diagonal_exponents():
    # p2 = q2 = p1 with r2 = inf holds without a constant
    rng = np.random.default_rng(9)
    for _ in range(300):
        f, g = _aligned(rng)
        q1 = rng.uniform(1.2, 6)
        r1 = rng.uniform(1.2, 6)
        p1 = 1 / (1 / q1 + 1 / r1)
        assert lorentz_holder_check(f, g, (p1, p1, q1, p1, r1, math.inf), constant=1.0)[2]


def test_holder_exponent_validation():
    with pytest.raises(InputError):
        lorentz_holder_check(ONE, ONE, (1, 1, 2, 2, 3, 2))
