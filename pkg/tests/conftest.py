import os

import numpy as np
import pytest

from MovingFrame.motions import AnalyticMotion


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch):
    # dotenv writes straight into os.environ; keep GALINV_* settings from leaking between tests
    clean = {k: v for k, v in os.environ.items() if not k.startswith("GALINV_")}
    monkeypatch.setattr(os, "environ", clean)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def circle():
    return AnalyticMotion.circle()


@pytest.fixture
def poly_motion(rng):
    return AnalyticMotion.random_polynomial(rng, degree=5)
