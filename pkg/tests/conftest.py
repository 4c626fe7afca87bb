import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_acceptance_lines: list[str] = []


@pytest.fixture
def record_criterion():
    """Call as ``record_criterion(n, passed, detail)``; lines appear in the summary."""
    def record(number, passed, detail="", soft=False):
        status = "PASS" if passed else ("WARN" if soft else "FAIL")
        line = f"criterion {number}: {status}  {detail}".rstrip()
        _acceptance_lines.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
