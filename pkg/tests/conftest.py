"""Shared fixtures and the acceptance report printed at the end of the run."""

from __future__ import annotations

import pytest

from nomalink.config import SimConfig

_REPORT: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Append ``"CRITERION n: PASS|FAIL  detail"`` lines; printed in the terminal summary."""

    def add(criterion, passed, detail):
        line = f"CRITERION {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        _REPORT.append(line)
        print(line)
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT, key=lambda s: (len(s.split(":")[0]), s)):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def comparison_run():
    """Default-config closed loop plus both baselines over 1000 frames (a few minutes)."""
    from nomalink.sim import run_baseline_comparison, run_closed_loop

    cfg = SimConfig()
    records = list(run_closed_loop(cfg))
    rows, streams = run_baseline_comparison(cfg, records=records)
    return cfg, records, rows, streams
