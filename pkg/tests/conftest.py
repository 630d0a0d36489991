import pathlib
import sys

import numpy as np
import pytest

SRC = pathlib.Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_point_data():
    """The symmetric pair with known closed-form solution at s = 2."""
    return np.array([[0.0, 0.0], [2.0, 0.0]])
