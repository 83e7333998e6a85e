"""Shared fixtures, and the per-criterion PASS/FAIL summary printed at the
end of every run that includes the acceptance suite."""

from __future__ import annotations

import pathlib

import pytest

from lineara import parse_program

GOLDEN = pathlib.Path(__file__).parent / "golden"

# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def prog():
    """Parse surface text into a Program."""
    return parse_program


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} -- {detail}")
