import random

import pytest

from procmap import WorkloadGraph, build_tree_topology

_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in _acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({duration:.1f}s)")


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def k2():
    return WorkloadGraph.from_edges(2, [(0, 1)])


@pytest.fixture
def two_bins():
    return build_tree_topology(2, [(0, 1)])


@pytest.fixture
def path4():
    return WorkloadGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
