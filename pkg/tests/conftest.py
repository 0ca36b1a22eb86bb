import time

import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with (number, description, passed, detail)."""
    start = time.perf_counter()

    def record(number, description, passed, detail=""):
        elapsed = time.perf_counter() - start
        _ACCEPTANCE.append((number, description, bool(passed), detail, elapsed))
        return elapsed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed, detail, elapsed in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {description} ({elapsed:.1f}s) {detail}")
