import pytest


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    entries = []
    for outcome, flag in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and getattr(report, "when", "call") in ("call", "setup"):
                name = nodeid.split("::")[-1].removeprefix("test_")
                entries.append((name, flag))
    if not entries:
        return
    terminalreporter.section("acceptance criteria")
    for name, flag in sorted(set(entries)):
        terminalreporter.write_line(f"{flag}  {name}")
