import pytest

from katoreg.semigroup import ModelParams

ACCEPTANCE_LINES = []


@pytest.fixture
def default_params():
    return ModelParams.make()


@pytest.fixture
def small_params():
    return ModelParams.make(dim=12, buffer=2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
