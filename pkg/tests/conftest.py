from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings

from restriktor.curve import CurveModel

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def cubic():
    return CurveModel(3)


@pytest.fixture
def quartic():
    return CurveModel(4)


@pytest.fixture
def tilted_cubic():
    return CurveModel(3, (Fraction(1), Fraction(1, 2)))
