import numpy as np
import pytest

from provnet.ingest import RegionSet
from provnet.synth import random_regions
from provnet.weights import build_knn


@pytest.fixture(scope="session")
def regions76():
    return random_regions(76, seed=7)


@pytest.fixture(scope="session")
def W76(regions76):
    return build_knn(regions76, 7)


@pytest.fixture
def line4():
    return RegionSet(("A", "B", "C", "D"), ("a", "b", "c", "d"), [0.0, 1.0, 2.0, 3.0], [0.0] * 4)


@pytest.fixture
def pair():
    return RegionSet(("A", "B"), ("a", "b"), [100.0, 101.0], [15.0, 15.5])


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20251017)


@pytest.fixture(scope="session")
def W2():
    # two regions, k=1: W = [[0, 1], [1, 0]]
    return build_knn(RegionSet(("A", "B"), ("A", "B"), [0.0, 1.0], [0.0, 0.0]), 1)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one acceptance line, print it, then assert the outcome."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def _report(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        lines.append((number, line))
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
