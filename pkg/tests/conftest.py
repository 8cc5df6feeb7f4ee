import numpy as np
import pytest

from rydafdm.harness import parse_config
from rydafdm.measurement import Scenario
from rydafdm.readout import AtomSystem
from rydafdm.waveform import DualChirpFrame

FS = 64e6


@pytest.fixture(scope="session")
def atom():
    return AtomSystem()


@pytest.fixture(scope="session")
def scenario():
    return Scenario()


@pytest.fixture(scope="session")
def frame():
    return DualChirpFrame.build(6, 1e-6, 0.25, 0.5, np.sqrt(2))


@pytest.fixture(scope="session")
def config():
    return parse_config("")


# One line per acceptance criterion, printed after the test session.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
