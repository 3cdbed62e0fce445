import sys
from pathlib import Path

import numpy as np
import pytest

from pwclra.config import SystemConfig

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def desk():
    """Default desk-scale system (N=32, N_RF=4, M=64, Q=4, K=4, L=2)."""
    return SystemConfig()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
