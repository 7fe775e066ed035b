import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def report():
    """Record one result line per acceptance criterion."""
    def record(num: int, ok: bool, detail: str):
        CRITERIA[num] = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for num in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[num])
