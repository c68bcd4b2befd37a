import numpy as np
import pytest

from oscillet.grid import GridFunction, GridSpec
from oscillet.wavelet import build_basis


@pytest.fixture(scope="session")
def spec1d():
    return GridSpec(n=1, J=8, j_min=0)


@pytest.fixture(scope="session")
def spec2d():
    return GridSpec(n=2, J=5, j_min=0)


@pytest.fixture(scope="session")
def meyer1d(spec1d):
    return build_basis("meyer", spec1d)


@pytest.fixture(scope="session")
def meyer2d(spec2d):
    return build_basis("meyer", spec2d)


@pytest.fixture(scope="session")
def daub1d(spec1d):
    return build_basis("daubechies", spec1d, m0=6)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def random_field1d(spec1d, rng):
    return GridFunction(spec1d, rng.standard_normal(spec1d.shape))


def band_limited(basis, rng):
    f = GridFunction(basis.spec, rng.standard_normal(basis.spec.shape))
    return basis.band_limit(f)
