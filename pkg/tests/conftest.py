"""Shared fixtures. The `extended` marker gates compute-heavy sweeps and
is opt-in through QCDYN_EXTENDED=1; everything else runs by default.
"""

import os
from pathlib import Path

import pytest

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

_ACCEPTANCE_LINES = []


def pytest_collection_modifyitems(config, items):
    if os.environ.get("QCDYN_EXTENDED") == "1":
        return
    skip = pytest.mark.skip(reason="extended sweep; set QCDYN_EXTENDED=1 to run")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion and assert it."""

    def report(number, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter):
    # always-visible acceptance roll-up, independent of output capture
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
