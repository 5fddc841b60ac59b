import pytest

ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion."""
    def record(number, ok, detail=""):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
