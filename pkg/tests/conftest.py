import numpy as np
import pytest

from vqforge.imaging import GrayImage

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_image(seed: int, height: int, width: int) -> GrayImage:
    return GrayImage(np.random.default_rng(seed).integers(0, 256, (height, width), dtype=np.uint8))


@pytest.fixture(scope="session")
def camera():
    data = pytest.importorskip("skimage.data")
    return GrayImage(data.camera())
