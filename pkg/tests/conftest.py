import re
from collections import OrderedDict

import pytest


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="also run long-running reproduction items")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="SKIPPED-LONG-RUNNING (use --runslow)")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


_criteria: "OrderedDict[int, list[str]]" = OrderedDict()
_CRITERION = re.compile(r"test_acceptance\.py::test_c(\d+)_")


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    outcomes = _criteria.setdefault(n, [])
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcomes.append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        outs = _criteria[n]
        if any(o == "failed" for o in outs):
            verdict = "FAIL"
        elif outs and all(o == "skipped" for o in outs):
            verdict = "SKIPPED-LONG-RUNNING"
        else:
            verdict = "PASS"
        extra = ""
        if "skipped" in outs and verdict != "SKIPPED-LONG-RUNNING":
            extra = f" ({outs.count('skipped')} long-running part(s) skipped)"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}{extra}")
