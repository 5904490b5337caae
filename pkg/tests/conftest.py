from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20220516)


# --- acceptance reporting -------------------------------------------------
# Tests marked @pytest.mark.criterion(number, title, check=...) are folded into
# one PASS/FAIL line per criterion number; failing sub-checks are named.

_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when != "call" and not report.failed:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "failed": []})
    if report.failed:
        entry["failed"].append(marker.kwargs.get("check", item.name))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"{status}  criterion {number}: {entry['title']}"
        if entry["failed"]:
            line += "  [failed: " + ", ".join(entry["failed"]) + "]"
        terminalreporter.write_line(line)
