import numpy as np
import pytest
from hypothesis import settings

from conflict_triad.bilateral import BilateralModel, iterate_bilateral

# numba compiles on first call; keep that out of per-test timings
settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def jit_warmup():
    for model in BilateralModel:
        iterate_bilateral(model, [0.3, 0.7], [0.6, 0.4], 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    # one line per acceptance criterion, in criterion order
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
