import pytest

from halfcake import extend_ergodic_pair
from halfcake import presets


@pytest.fixture(scope="session")
def counterexample_spec():
    return presets.counterexample_network()


@pytest.fixture(scope="session")
def reduced_spec():
    return presets.reduced_example_network()


@pytest.fixture(scope="session")
def rect23_spec():
    return presets.rect_2x3_network()


@pytest.fixture(scope="session")
def asym_spec():
    return presets.mixed_dims_network()


@pytest.fixture(scope="session")
def counterexample_ext(counterexample_spec):
    return extend_ergodic_pair(counterexample_spec, seed=0)
