import math

import numpy as np
import pytest
from hypothesis import strategies as st

from cvtele.core import ChannelParams, TeleporterParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


thetas = st.floats(0.05, math.pi / 2 - 0.05)
gains = st.floats(0.0, 2.5)
transmissivities = st.floats(0.5, 1.0)
teleporters = st.builds(TeleporterParams, thetas, gains, gains, transmissivities)
channels = st.builds(ChannelParams, st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.0, 2.5))


def random_params(rng):
    return (
        TeleporterParams(rng.uniform(0.05, math.pi / 2 - 0.05), rng.uniform(0, 2.5), rng.uniform(0, 2.5),
                         rng.uniform(0.5, 1.0)),
        ChannelParams(rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2.5)),
    )


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
