"""Collects one pass/fail line per acceptance criterion and prints them at the end."""
import pytest

RESULTS = {}


@pytest.fixture
def record():
    def _record(key, passed, detail):
        line = f"{key} {'PASS' if passed else 'FAIL'}: {detail}"
        RESULTS[key] = line
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
