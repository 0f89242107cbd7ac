import io

import numpy as np
import pytest

from teags.ingest import (
    FACETS,
    FACET_BY_KIND,
    AlarmEvent,
    IngestError,
    build_nta_cube,
    facet_split,
    parse_events,
    tokenize,
    write_events,
)


def test_parse_empty_file_gives_empty_list():
    assert parse_events("", "csv") == []
    assert parse_events("", "jsonl") == []


def test_parse_single_jsonl_record_round_trip():
    line = '{"alarm_id": "a1", "node_id": "n1", "category": "c1", "timestamp": 5, "text": "hello"}\n'
    events = parse_events(line, "jsonl")
    assert events == [AlarmEvent("a1", "n1", "c1", 5, "hello")]


def test_parse_csv_header_and_order():
    src = "alarm_id,node_id,category,timestamp,text\na1,n1,c1,10,foo\na2,n2,c2,3,bar\n"
    events = parse_events(src, "csv")
    assert [e.alarm_id for e in events] == ["a1", "a2"]
    assert events[1].timestamp == 3


def test_negative_timestamp_reports_line():
    src = "alarm_id,node_id,category,timestamp,text\na1,n1,c1,10,x\na2,n2,c1,-5,y\n"
    with pytest.raises(IngestError) as exc:
        parse_events(src, "csv")
    assert exc.value.line == 3


def test_duplicate_alarm_id_names_the_id():
    src = "alarm_id,node_id,category,timestamp,text\ndup,n1,c1,1,x\ndup,n2,c1,2,y\n"
    with pytest.raises(IngestError, match="dup"):
        parse_events(src, "csv")


def test_malformed_jsonl_reports_line():
    src = '{"alarm_id": "a1", "node_id": "n1", "category": "c", "timestamp": 1, "text": ""}\nnot json\n'
    with pytest.raises(IngestError) as exc:
        parse_events(src, "jsonl")
    assert exc.value.line == 2


def test_missing_field_reports_line():
    src = '{"alarm_id": "a1", "node_id": "n1", "timestamp": 1, "text": ""}\n'
    with pytest.raises(IngestError) as exc:
        parse_events(src, "jsonl")
    assert exc.value.line == 1


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_serialize_parse_round_trip(fmt):
    events = [
        AlarmEvent("a1", "n1", "c1", 100, "some text, with punctuation!"),
        AlarmEvent("a2", "n2", "c2", 200, ""),
        AlarmEvent("a3", "n1", "c1", 300, "unicode événement"),
    ]
    buf = io.StringIO()
    write_events(events, buf, fmt)
    assert parse_events(buf.getvalue(), fmt) == events


def test_facet_split_hand_examples():
    # 1970-01-01T05:30Z
    assert facet_split("hour", 5 * 3600 + 30 * 60) == 5
    # 1970-01-31 is day-of-month 31 -> floor(30/7) = 4
    assert facet_split("week", 30 * 86400) == 4
    # 1970-01-01 was a Thursday
    assert facet_split("day", 0) == 3
    assert facet_split("month", 0) == 0
    # 1970-02-01
    assert facet_split("month", 31 * 86400) == 1


def test_facet_split_total_on_random_timestamps(rng):
    ts = rng.integers(0, 2_000_000_000, size=10_000)
    for facet in FACETS:
        splits = np.array([facet_split(facet, int(t)) for t in ts])
        assert splits.min() >= 0
        assert splits.max() < facet.split_count


def test_facet_parent_chain_ends_at_month():
    kind = "hour"
    seen = []
    while kind is not None:
        seen.append(kind)
        kind = FACET_BY_KIND[kind].parent
    assert seen == ["hour", "day", "week", "month"]


def test_cube_empty_events():
    cube = build_nta_cube([], FACETS[0])
    assert cube.cells == {}
    assert cube.total_count() == 0


def test_cube_single_event():
    cube = build_nta_cube([AlarmEvent("a1", "n1", "c1", 5 * 3600, "hi there")], FACETS[0])
    assert cube.cells == {("n1", 5, "c1"): 1}


def test_cube_aggregates_same_cell_and_orders_text():
    events = [
        AlarmEvent("a1", "n1", "c1", 5 * 3600 + 20, "second"),
        AlarmEvent("a2", "n1", "c1", 5 * 3600 + 10, "first"),
        AlarmEvent("a3", "n1", "c1", 5 * 3600 + 30, "third"),
    ]
    cube = build_nta_cube(events, FACETS[0])
    assert cube.cells == {("n1", 5, "c1"): 3}
    assert cube.texts[("n1", 5)] == "first second third"


def test_cube_mass_conservation_all_facets(rng):
    events = [
        AlarmEvent(f"a{k}", f"n{int(rng.integers(5))}", f"c{int(rng.integers(3))}",
                   int(rng.integers(0, 10**9)), "t")
        for k in range(200)
    ]
    for facet in FACETS:
        assert build_nta_cube(events, facet).total_count() == len(events)


def test_tokenize_rules():
    assert tokenize("Hello, WORLD! a b2c x") == ["hello", "world", "b2c"]
    assert tokenize("") == []
