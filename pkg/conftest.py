"""Makes the package importable from the tests and shares fixtures."""

import sys
from pathlib import Path

import matplotlib
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))
matplotlib.use('Agg')


@pytest.fixture
def rng():
    return np.random.default_rng(290696)
