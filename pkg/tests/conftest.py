import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(8675309)


def random_symmetric(rng, n):
    M = rng.standard_normal((n, n))
    return (M + M.T) / 2
