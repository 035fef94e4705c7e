import numpy as np
import pytest
from scipy.stats import kstest


def ks_uniform(values) -> float:
    """KS statistic of a sample against Uniform(0, 1)."""
    return float(kstest(np.asarray(values), "uniform").statistic)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
