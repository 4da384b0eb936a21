import warnings

import pytest

from crncycles import _kernels
from crncycles.systems import SeparationWarning


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Load (or build) the compiled stepper cache once per session so timed
    tests measure the algorithms, not JIT compilation."""
    _kernels.warmup()


@pytest.fixture(autouse=True)
def quiet_separation_warnings():
    # demo center layouts violate the separation condition by design
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SeparationWarning)
        yield
