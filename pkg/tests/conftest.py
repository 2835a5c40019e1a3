import numpy as np
import pytest

from app.dassim.das_fiber import synthesize
from app.dassim.das_models import FiberConfig, ProbeConfig, Scheme


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def short_fiber():
    """100 m fibre, 50 segments, beat length 10 m."""
    return synthesize(FiberConfig(length=100.0, segment_length=2.0, seed=7))


@pytest.fixture
def quiet_probe():
    """Noiseless MIMO probe with a short code."""
    return ProbeConfig(scheme=Scheme.MIMO, code_log2_length=7, frames=2, laser_linewidth=0.0,
                       rx_noise_sigma=0.0, seed=3)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
