import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def textured_image(rng, size=48, base=(128, 128, 128), spread=40):
    """Noisy colour image around a base colour, clipped to [0, 255]."""
    noise = rng.normal(0.0, spread, (size, size, 3))
    return np.clip(np.asarray(base, dtype=np.float64) + noise, 0, 255).round()


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
