import pytest

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Record ``(passed, detail)`` for an acceptance criterion; printed at session end."""
    def record(number: int, name: str, passed: bool, detail: str = ""):
        line = f"criterion {number} [{name}]: {'PASS' if passed else 'FAIL'}" + (f" -- {detail}" if detail else "")
        _ACCEPTANCE[number] = (passed, line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number][1])
