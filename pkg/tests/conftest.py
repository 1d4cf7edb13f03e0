import os
from pathlib import Path

import pytest

from avcn.graphs import Graph, load_tu_dataset
from avcn.synthetic import make_dataset

ROOT = Path(__file__).resolve().parent.parent


def mutag_dir():
    """Directory holding MUTAG_*.txt, or None.

    Looked up under $AVCN_DATA_DIR, then <repo>/data, with or without a
    MUTAG/ subdirectory.
    """
    bases = [os.environ.get("AVCN_DATA_DIR"), ROOT / "data"]
    for base in bases:
        if not base:
            continue
        for d in (Path(base), Path(base) / "MUTAG"):
            if (d / "MUTAG_A.txt").is_file():
                return d
    return None


@pytest.fixture(scope="session")
def mutag_dir_path():
    d = mutag_dir()
    if d is None:
        pytest.fail(
            "MUTAG not found: put MUTAG_A.txt etc. in data/MUTAG/ or set AVCN_DATA_DIR",
            pytrace=False,
        )
    return d


@pytest.fixture(scope="session")
def mutag():
    d = mutag_dir()
    if d is None:
        pytest.fail(
            "MUTAG not found: put MUTAG_A.txt etc. in data/MUTAG/ or set AVCN_DATA_DIR",
            pytrace=False,
        )
    return load_tu_dataset(d, "MUTAG")


@pytest.fixture(scope="session")
def synth():
    return make_dataset(120, seed=3)


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


# -- acceptance summary ------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    crit = getattr(report, "_criterion", None)
    if crit is None:
        return
    num, title = crit
    ok, dur, _ = _criteria.get(num, (True, 0.0, title))
    _criteria[num] = (ok and not report.failed, dur + report.duration, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        ok, dur, title = _criteria[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title} ({dur:.1f}s)")
