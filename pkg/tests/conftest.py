import pytest

from tracescope.dataset import assemble
from tracescope.ingest import ingest_trace
from tracescope.store import DatasetStore

# A(run) spans [0,100) on location 0; its children B and C (loop) run on
# locations 0 and 1. Durations 100, 30, 40.
THREE_INTERVAL_TRACE = """\
# three-interval fixture
L 0 0 0
L 1 0 1
E 0 0 1 - run
E 10 0 2 1 loop
X 40 0 2
E 20 1 3 1 loop
X 60 1 3
X 100 0 1
"""


@pytest.fixture
def three_trace(tmp_path):
    path = tmp_path / "three.trace"
    path.write_text(THREE_INTERVAL_TRACE, encoding="utf-8")
    return path


@pytest.fixture
def three_ds(three_trace):
    raw = ingest_trace(three_trace)
    return assemble(raw, "fixture0000000000", "three")


@pytest.fixture
def tmp_store(tmp_path):
    return DatasetStore(tmp_path / "data")


def write_trace_text(tmp_path, text, name="case.trace"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def dataset_from_text(tmp_path, text, name="case.trace", bin_count=4096):
    raw = ingest_trace(write_trace_text(tmp_path, text, name))
    return assemble(raw, "testcase00000000", "case", bin_count)
