"""Acceptance reporting: one PASS/FAIL/SKIP line per numbered criterion."""

from collections import defaultdict

import pytest

_results: dict[int, dict] = defaultdict(lambda: {"title": "", "outcomes": [], "notes": []})


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test covers")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _results[number]
    entry["title"] = title
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["outcomes"].append(report.outcome)
        entry["notes"].extend(f"{k}={v}" for k, v in item.user_properties)
        if report.skipped and isinstance(report.longrepr, tuple):
            entry["notes"].append(report.longrepr[2])


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        outs = entry["outcomes"]
        if any(o == "failed" for o in outs):
            verdict = "FAIL"
        elif outs and all(o == "skipped" for o in outs):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        notes = "; ".join(dict.fromkeys(entry["notes"]))
        terminalreporter.write_line(f"criterion {number:2d} {verdict:4s} {entry['title']}" + (f"  [{notes}]" if notes else ""))
