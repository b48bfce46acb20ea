from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

_results: dict[int, list[tuple[str, str]]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion this test checks")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def pytest_runtest_logreport(report):
    numbers = [v for k, v in report.user_properties if k == "criterion"]
    if not numbers:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _results[numbers[0]].append((report.nodeid, report.outcome))


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    from test_acceptance import CRITERIA

    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        runs = _results.get(n, [])
        if not runs:
            tr.write_line(f"criterion {n:>2}: NOT RUN  {CRITERIA[n]}")
            continue
        passed = sum(1 for _, outcome in runs if outcome == "passed")
        status = "PASS" if passed == len(runs) else "FAIL"
        tr.write_line(f"criterion {n:>2}: {status} ({passed}/{len(runs)} checks)  {CRITERIA[n]}")
