from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).resolve().parent))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, elapsed: float, limit: float | None = None, detail: str = ""):
        status = "PASS" if passed else "FAIL"
        budget = f" (limit {limit:g} s)" if limit is not None else ""
        extra = f" - {detail}" if detail else ""
        line = f"[{status}] criterion {number:2d}: {title}: {elapsed:.2f} s{budget}{extra}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
