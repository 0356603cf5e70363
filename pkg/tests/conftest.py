import pytest

from minnisens import kernels
from minnisens.summary import edinburgh_records, ingest_records, summarize, synthesize_summary

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def edinburgh():
    """Summary computed from the 6136 survey records."""
    return summarize(ingest_records(edinburgh_records()))


@pytest.fixture(scope="session")
def published():
    """Summary rebuilt from the published values 0.7320 and 0.376."""
    return synthesize_summary(0.7320, 0.376, 3828)


def _available_backends():
    names = ["python"]
    try:
        kernels.backend("cython")
        names.append("cython")
    except ImportError:
        pass
    return names


@pytest.fixture(params=_available_backends())
def backend(request):
    return kernels.backend(request.param)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
