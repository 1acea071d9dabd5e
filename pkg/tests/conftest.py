from __future__ import annotations

from pathlib import Path

import pytest

from ptrsdisprove.ptrs import PTRS, load_ptrs

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "ptrsdisprove" / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.ptrs"


def load_fixture(name: str) -> PTRS:
    return load_ptrs(fixture_path(name))


@pytest.fixture
def fixture():
    return load_fixture


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
