import pytest

from emcmc.graph import SpatialGraph, load_graph
from emcmc.io import grid_document
from emcmc.model import ChainRng


def grid(rows, cols, weights=None, characteristics=None) -> SpatialGraph:
    return load_graph(grid_document(rows, cols, weights, characteristics))


@pytest.fixture
def path3():
    return grid(1, 3)


@pytest.fixture
def path4():
    return grid(1, 4)


@pytest.fixture
def square():
    return grid(2, 2)


@pytest.fixture
def grid4():
    return grid(4, 4)


@pytest.fixture
def rng():
    return ChainRng.for_chain(12345, 0)


# --- acceptance summary -------------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    outcome = "PASS" if call.excinfo is None else "FAIL"
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[number] = (outcome, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        outcome, title, detail = _CRITERIA[number]
        line = f"criterion {number:>2}: {outcome}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
