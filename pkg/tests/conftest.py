import os
import sys

# the pool size is fixed when numba starts; leave room for the threaded checks
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

sys.path.insert(0, os.path.dirname(__file__))

import numpy as np  # noqa: E402
import pytest  # noqa: E402
from hypothesis import settings  # noqa: E402

from heaanmul import make_params  # noqa: E402

# first calls pay for numba compilation
settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session", params=[64, 32], ids=["w64", "w32"])
def word(request):
    return request.param


@pytest.fixture(scope="session")
def small_params():
    # log Q = 300 with a toy ring; fast enough for every scheme test
    return make_params(30, 10, 64, N=1024, check_security=False)


@pytest.fixture(scope="session")
def small_keys(small_params):
    from heaanmul import keygen
    return keygen(small_params, 7)
