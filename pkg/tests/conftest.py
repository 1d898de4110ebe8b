import csv
from pathlib import Path

import pytest

from kgdim.core import Dimension, Edge
from kgdim.ingest import read_edges

DATA = Path(__file__).parent / "data"
FIXTURE = DATA / "fixture_edges.tsv"


def make_edge(eid, head, rel, tail, source="CN", dimension=None, rel_label=""):
    return Edge(
        id=eid,
        node1=f"/c/en/{head.replace(' ', '_')}",
        relation=rel,
        node2=f"/c/en/{tail.replace(' ', '_')}",
        node1_label=head,
        node2_label=tail,
        relation_label=rel_label,
        source=source,
        dimension=Dimension(dimension) if dimension else None,
    )


@pytest.fixture
def fixture_edges():
    with open(FIXTURE, "rb") as fh:
        edges, stats = read_edges(fh, strict=True)
    return edges


@pytest.fixture
def transcription():
    with open(DATA / "taxonomy_transcription.tsv", encoding="utf-8") as fh:
        return list(csv.DictReader(fh, delimiter="\t"))


_ACCEPTANCE: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion")


def pytest_runtest_logreport(report):
    item_marker = getattr(report, "criterion", None)
    if item_marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _ACCEPTANCE[item_marker] = status


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        n, title = marker.args
        outcome.get_result().criterion = f"{n}. {title}"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        terminalreporter.write_line(f"{_ACCEPTANCE[name]}  {name}")
