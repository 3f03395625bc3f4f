import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

# first calls into compiled kernels include JIT time
settings.register_profile("default", deadline=None)
settings.load_profile("default")

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture(scope="session")
def million_keys():
    return np.random.default_rng(7).integers(0, 2**64, 10**6, dtype=np.uint64)


@pytest.fixture(scope="session")
def ten_million_probes():
    return np.random.default_rng(8).integers(0, 2**64, 10**7, dtype=np.uint64)


def pytest_terminal_summary(terminalreporter):
    import verdicts

    if verdicts.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(verdicts.LINES, key=verdicts.criterion_number):
            terminalreporter.write_line(line)
