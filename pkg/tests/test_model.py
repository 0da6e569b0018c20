import pytest

from tracescope.model import (
    CounterSample,
    DatasetMeta,
    Interval,
    Location,
    StringTable,
    duration,
)


def test_location_label_format():
    assert Location(0, 3, 1).label == "3-1"
    assert Location(5, 0, 0).label == "0-0"


def test_interval_duration():
    assert duration(Interval(1, None, 0, 0, 0, 100)) == 100
    assert duration(Interval(2, None, 0, 0, 17, 42)) == 25
    assert Interval(3, None, 0, 0, 17, 42).duration == 25


def test_interval_rejects_zero_duration():
    with pytest.raises(ValueError):
        Interval(1, None, 0, 0, 5, 5)
    with pytest.raises(ValueError):
        Interval(1, None, 0, 0, 9, 4)


def test_interval_rejects_self_parent():
    with pytest.raises(ValueError):
        Interval(1, 1, 0, 0, 0, 10)


def test_string_table_round_trip():
    table = StringTable()
    ids = [table.intern(n) for n in ["run", "loop", "run", "gemm"]]
    assert ids == [0, 1, 0, 2]
    for name in ["run", "loop", "gemm"]:
        assert table.name_of(table.id_of(name)) == name
    assert table.names() == ["run", "loop", "gemm"]
    assert len(table) == 3
    assert table.id_of("missing") is None


def test_string_table_equality_is_order_sensitive():
    a = StringTable()
    b = StringTable()
    for n in ["x", "y"]:
        a.intern(n)
    for n in ["y", "x"]:
        b.intern(n)
    assert a != b


def test_counter_sample_fields():
    s = CounterSample(location=1, counter=0, time=50, value=123.0)
    assert (s.location, s.counter, s.time, s.value) == (1, 0, 50, 123.0)


def test_meta_span_and_dict():
    meta = DatasetMeta(
        dataset_id="abc",
        label="demo",
        time_begin=0,
        time_end=500,
        location_count=2,
        interval_count=3,
        primitive_names=["run"],
        counter_names=[],
        source_files=[],
    )
    assert meta.span == 500
    d = meta.to_dict()
    assert d["dataset_id"] == "abc"
    assert d["time_end"] == 500
    assert d["interval_count"] == 3
