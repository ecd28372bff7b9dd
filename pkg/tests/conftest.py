# tests/conftest.py
from __future__ import annotations

import numpy as np
import pytest

from qssmix.curve import Curve
from qssmix.families import CurveFamily


@pytest.fixture
def circle() -> Curve:
    return Curve.circle(0.25, n=256)


@pytest.fixture
def ellipse() -> Curve:
    return Curve.ellipse(0.3, 0.15, center=(0.5, 0.5), n=256)


@pytest.fixture
def snake_curve() -> Curve:
    return CurveFamily.snake(0, n=512).curve(0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
