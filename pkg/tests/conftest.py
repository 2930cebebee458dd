import pytest

from cmpbench.devices import load_bundled_spec
from cmpbench.sim import load_bundled_profile


@pytest.fixture(scope="session")
def cmp170hx():
    return load_bundled_spec("cmp170hx")


@pytest.fixture(scope="session")
def a100():
    return load_bundled_spec("a100-40g")


@pytest.fixture(scope="session")
def cmp_truth(cmp170hx):
    return load_bundled_profile("cmp170hx-truth", cmp170hx)
