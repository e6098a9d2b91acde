import re

import pytest

# (number, passed, detail) lines filled in by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def _report(number, passed, detail):
        ACCEPTANCE_LINES.append((number, passed, detail))
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    def order(line):
        label = str(line[0])
        return int(re.match(r"\d+", label).group()), label

    for number, passed, detail in sorted(ACCEPTANCE_LINES, key=order):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {detail}")
