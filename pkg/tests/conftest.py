import numpy as np
import pytest

from vortexlab import field_calculus as fc


@pytest.fixture
def grid16():
    return fc.GridSpec(16, (1.0, 1.0), "spectral")


@pytest.fixture
def grid8():
    return fc.GridSpec(8, (1.0, 1.0), "spectral")


def random_covectors(rng, count):
    return rng.standard_normal((count, 4)) + 1j * rng.standard_normal((count, 4))


def real_unit_covectors(rng, count):
    from vortexlab.spin_algebra import real_covector

    x = rng.standard_normal((count, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return real_covector(x)
