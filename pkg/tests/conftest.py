import pytest

from nekrasov.operators import krasovskii_problem, nekrasov_problem

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


@pytest.fixture(scope="session")
def deep():
    return nekrasov_problem(N=64)


@pytest.fixture(scope="session")
def kras():
    return krasovskii_problem(N=64)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: (len(s.split()[1]), s)):
        terminalreporter.write_line(line)
