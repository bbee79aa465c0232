import numpy as np
import pytest

from emtoolkit.core import natural_units, si_units


@pytest.fixture
def nat():
    return natural_units()


@pytest.fixture
def si():
    return si_units()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
