from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import pytest

from ecreport.storage import load_transcript

FIXTURES = Path(__file__).parent / "fixtures"
ROOT = Path(__file__).parent.parent

# criterion number -> (title, [outcomes])
_criteria: dict[int, tuple[str, list[str]]] = {}
_pending: dict[str, tuple[int, str]] = {}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def nova():
    return load_transcript(FIXTURES / "transcripts" / "NOVA-2021-Q4.json")


@pytest.fixture
def hrbr():
    return load_transcript(FIXTURES / "transcripts" / "HRBR-2022-Q1.json")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _pending[item.nodeid] = (number, title)
            _criteria.setdefault(number, (title, []))


def pytest_runtest_logreport(report):
    if report.nodeid not in _pending:
        return
    number, _ = _pending[report.nodeid]
    if report.when == "call" or report.failed or report.skipped:
        outcome = "passed" if report.passed else "skipped" if report.skipped else "failed"
        if report.when == "call" or outcome != "passed":
            _criteria[number][1].append(outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, outcomes = _criteria[number]
        if not outcomes:
            status = "NOT RUN"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        counts = defaultdict(int)
        for o in outcomes:
            counts[o] += 1
        detail = ", ".join(f"{n} {k}" for k, n in sorted(counts.items()))
        terminalreporter.write_line(f"AC{number} {status:<7} {title} ({detail})")
