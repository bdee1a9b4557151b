import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = []


@pytest.fixture()
def criterion():
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} :: {detail}"
        _CRITERIA.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
