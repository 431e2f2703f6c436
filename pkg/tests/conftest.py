import pytest

from hxmonitor.model import PriorSpec
from hxmonitor.npe.engine import generate_training_set, train
from hxmonitor.observation import OperatingConditions

COMPACT_BUDGET = 5000
_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def compact_training_set():
    return generate_training_set(COMPACT_BUDGET, PriorSpec(), OperatingConditions(), seed=2024)


@pytest.fixture(scope="session")
def compact_posterior(compact_training_set):
    """NPE trained once per session on the compact simulation budget."""
    return train(compact_training_set)


@pytest.fixture
def verdict():
    """Record and print a criterion's outcome, then fail the test if it did not hold."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
