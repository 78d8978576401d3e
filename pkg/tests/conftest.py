import time

import pytest

from birdfoot.harness import sweep
from birdfoot.params import ProtocolParams

_CRITERIA = {}


@pytest.fixture(scope="session")
def full_sweep():
    """The default nine-leg, four-substrate sweep, timed once per session."""
    t0 = time.perf_counter()
    result = sweep(ProtocolParams())
    return result, time.perf_counter() - t0


@pytest.fixture
def criterion():
    """Record one acceptance line, then assert it."""

    def record(number, title, ok, detail=""):
        _CRITERIA[number] = (title, bool(ok), detail)
        print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
        assert ok, f"criterion {number}: {title} {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
