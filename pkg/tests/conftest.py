"""Shared test configuration.

The container running CI has a single CPU, so hypothesis deadlines are
disabled; statistical tests pin their seeds instead of retrying. The
acceptance suite records one line per criterion and replays them in the
terminal summary so the pass/fail ledger is visible without -s.
"""
from __future__ import annotations

from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
