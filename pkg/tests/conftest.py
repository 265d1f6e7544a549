import logging

import numpy as np
import pytest

from gridsec.demand import SyntheticDemandParams, synthetic_demands

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _quiet_logs():
    logging.getLogger("gridsec").setLevel(logging.ERROR)
    yield


@pytest.fixture(scope="session")
def corpus_30():
    """M=25, T=24, 30 seeded days of two-peak demand (households x days x T)."""
    return synthetic_demands(SyntheticDemandParams(M=25, days=30, T=24, seed=7))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record_acceptance(line: str):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
