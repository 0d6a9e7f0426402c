import pytest

from ptbloch.potential import PotentialSpec


@pytest.fixture
def free_spec():
    return PotentialSpec.free()


@pytest.fixture
def cos_spec():
    # u(x) = 0.1 cos x
    return PotentialSpec.from_coefficients({1: 0.05, -1: 0.05})


@pytest.fixture
def pt_spec():
    # u(x) = 0.2 e^{ix} - 0.05 e^{-ix}
    return PotentialSpec.from_coefficients({1: 0.2, -1: -0.05})


@pytest.fixture
def one_sided_spec():
    return PotentialSpec.from_coefficients({1: 0.2})
