import pytest

from hyperkernel.mpnum import PrecisionContext


@pytest.fixture(scope="session")
def ctx():
    return PrecisionContext(256, "1e-30")


@pytest.fixture(scope="session")
def ctx128():
    return PrecisionContext(128, "1e-20")


def rel(a, b):
    """Relative difference, measured against the larger magnitude."""
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else abs(a - b)


_CRITERIA = []


@pytest.fixture
def report(request):
    """Print one PASS/FAIL line for an acceptance criterion, then assert it."""
    terminal = request.config.pluginmanager.getplugin("terminalreporter")

    def emit(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append(line)
        if terminal is not None:
            terminal.write_line("")
            terminal.write_line(line)
        assert ok, line

    return emit


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
