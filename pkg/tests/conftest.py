"""Shared fixtures, plus the per-criterion summary printed after the run.

Tests in test_acceptance.py carry ``@pytest.mark.criterion(n, title)``. A
criterion passes when every test carrying its number passed.
"""

from pathlib import Path

import pytest

from fhcalc.corpus import corpus_programs

GOLDEN = Path(__file__).parent / "golden"

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            n, title = m.args
            _results.setdefault(n, {"title": title, "passed": 0, "failed": []})


def pytest_runtest_logreport(report):
    if report.when != "call" and not report.failed:
        return
    m = dict(report.user_properties).get("criterion")
    if m is None:
        return
    entry = _results[m]
    if report.failed:
        entry["failed"].append(report.nodeid.split("::")[-1])
    elif report.when == "call" and report.passed:
        entry["passed"] += 1


@pytest.fixture(autouse=True)
def _tag_criterion(request, record_property):
    m = request.node.get_closest_marker("criterion")
    if m is not None:
        record_property("criterion", m.args[0])


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        entry = _results[n]
        if entry["failed"]:
            status = "FAIL"
        elif entry["passed"]:
            status = "PASS"
        else:
            status = "NOT RUN"
        line = f"criterion {n:2d} {status}  {entry['title']}"
        if entry["failed"]:
            line += f"  (failed: {', '.join(entry['failed'])})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def corpus():
    return corpus_programs()
