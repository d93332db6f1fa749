import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from matevo.scenarios import builtin_scenario, sample_deformations  # noqa: E402


@pytest.fixture(scope="session")
def samples():
    return sample_deformations(42, 40, 0.2)


@pytest.fixture(scope="session")
def scenario():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = builtin_scenario(name)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
