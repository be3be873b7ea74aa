import numpy as np
import pytest
from hypothesis import settings

from opengraphon import constant_graphon, two_block_sbm

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def sbm():
    return two_block_sbm(0.8, 0.2)


@pytest.fixture
def half():
    return constant_graphon(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = []
    for mod in list(sys.modules.values()):
        lines.extend(getattr(mod, "ACCEPTANCE_LINES", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
