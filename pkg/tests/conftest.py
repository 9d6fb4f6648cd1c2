import os
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def _grid(size):
    i, j = np.mgrid[0:size, 0:size] / (size - 1)
    return i, j


def hand_images(size=32):
    """Five small RGB images with distinct structure."""
    i, j = _grid(size)
    ramp = np.stack([j, i, 0.5 * (i + j)], axis=-1)
    checker = ((np.floor(i * 8) + np.floor(j * 8)) % 2)
    checker = np.stack([checker, 1 - checker, 0.25 + 0.5 * checker], axis=-1)
    r = np.hypot(i - 0.5, j - 0.5)
    disc = np.stack([(r < 0.3) * 0.9, (r < 0.2) * 0.8 + 0.1, np.clip(1 - 2 * r, 0, 1)], axis=-1)
    noise = np.random.default_rng(7).uniform(0, 1, (size, size, 3))
    waves = np.stack([0.5 + 0.5 * np.sin(6 * i), 0.5 + 0.5 * np.cos(5 * j),
                      0.5 + 0.5 * np.sin(4 * (i + j))], axis=-1)
    return {"ramp": ramp, "checker": checker, "disc": disc, "noise": noise, "waves": waves}


@pytest.fixture(scope="session")
def images():
    return hand_images()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
