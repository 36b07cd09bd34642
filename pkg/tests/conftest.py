import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import heavyldp as H

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def weibull_half():
    return H.weibull(1.0, 0.5)


@pytest.fixture
def spherical_spec():
    return H.IncrementSpec(H.RadiusDistribution(H.weibull(1.0, 0.5)), H.uniform_directions(2))


BUILTIN = [
    H.weibull(1.0, 0.3),
    H.weibull(2.0, 0.5),
    H.weibull(1.0, 0.9),
    H.lognormal_type(2.0),
    H.lognormal_type(1.5),
    H.stretched_exp(0.7, 3.0),
]


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
