import numpy as np
import pytest

from elaselect import bbob, ela


@pytest.fixture(scope="session")
def sphere_base():
    return bbob.make_instance(1, 0, 5)


@pytest.fixture(scope="session")
def sphere_sample_2000(sphere_base):
    return ela.uniform_sample(sphere_base, 2000, 3)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def make_sample(points, values, seed=0):
    return ela.SampleSet(np.asarray(points, dtype=float), np.asarray(values, dtype=float), seed)
