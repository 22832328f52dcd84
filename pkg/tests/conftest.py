"""Shared pytest wiring: per-criterion pass/fail lines for the acceptance suite."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))  # make tests/synth.py importable


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {status}")
    elif report.when == "setup" and report.skipped:
        print(f"\n[acceptance] {name}: SKIP")
