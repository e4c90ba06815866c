import numpy as np
import pytest
from hypothesis import settings

from b2bplan.profiles import from_arrays

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def profile_from_net(net, step_hours=0.5, backfeed_limit_kw=0.0, label="p"):
    """Feeder whose net load is exactly ``net`` (load carries the positive part, DER the rest)."""
    net = np.asarray(net, dtype=float)
    return from_arrays(np.maximum(net, 0.0), np.maximum(-net, 0.0), step_hours, backfeed_limit_kw, label)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
