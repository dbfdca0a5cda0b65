import numpy as np
import pytest

from stealthmark.detector import PayloadLibrary
from stealthmark.imaging import ImageBuffer


def flat(width, height, value=128):
    return ImageBuffer.filled(width, height, (value, value, value))


def random_image(rng, width, height, low=0, high=256):
    return ImageBuffer(rng.integers(low, high, size=(height, width, 3), dtype=np.uint8))


@pytest.fixture(scope="session")
def library():
    return PayloadLibrary.default()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# One summary line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
