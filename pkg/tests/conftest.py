import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from llframe import FrameConfig, get_factorization  # noqa: E402


@pytest.fixture(scope="session")
def default_config():
    return FrameConfig(N=15, T=6.0, gamma=1.0, epsilon=1e-14)


@pytest.fixture(scope="session")
def default_fact(default_config):
    return get_factorization(default_config)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
