import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def centered(draw, min_size=2, max_size=24, bound=10.0):
    """Centered float vectors; the mean is removed so sums are zero to rounding."""
    xs = draw(st.lists(st.floats(-bound, bound, allow_nan=False, allow_infinity=False),
                       min_size=min_size, max_size=max_size))
    arr = np.asarray(xs, dtype=float)
    return arr - arr.mean()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_centered(rng, n):
    x = rng.uniform(-1, 1, n)
    return x - x.mean()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
