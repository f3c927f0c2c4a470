import json
import threading
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semint.errors import CorruptFile, ValidationError
from semint.store import (
    EventKind,
    EventLog,
    Literal,
    RWLock,
    Triple,
    TripleStore,
    Variable,
    load,
    load_log,
    load_triples,
    parse_term,
    pattern,
    render_term,
    save,
)


def test_insert_is_set_semantics():
    s = TripleStore()
    t = Triple("obs1", "rdf:type", "ssn:Observation")
    assert s.insert(t) is True
    assert s.insert(t) is False
    assert len(s) == 1


def test_match_binds_variables():
    s = TripleStore([
        Triple("obs1", "rdf:type", "ssn:Observation"),
        Triple("obs2", "rdf:type", "ikon:Observation"),
        Triple("obs1", "ssn:hasValue", Literal("31.5")),
    ])
    assert s.match(pattern("?x", "rdf:type", "ssn:Observation")) == [{"x": "obs1"}]
    assert s.match(pattern("obs1", "ssn:hasValue", "?v")) == [{"v": Literal("31.5")}]
    assert s.match(pattern("?x", "?p", "?x")) == []


def test_repeated_variable_requires_equal_terms():
    s = TripleStore([Triple("a", "p", "a"), Triple("a", "p", "b")])
    assert s.match(pattern("?x", "p", "?x")) == [{"x": "a"}]


def test_literal_is_distinct_from_identifier():
    s = TripleStore([Triple("a", "p", "b"), Triple("a", "p", Literal("b"))])
    assert len(s) == 2
    assert render_term(Literal("b")) == '"b"'
    assert parse_term('"b"') == Literal("b")
    assert parse_term("?b") == Variable("b")


@pytest.mark.parametrize("bad", [("", "p", "o"), ("s", "p o", "o"), ("s", "p", ""), ("?s", "p", "o")])
def test_triple_rejects_bad_terms(bad):
    with pytest.raises(ValidationError):
        Triple(*bad)


def test_text_round_trip(tmp_path):
    s = TripleStore([
        Triple("obs1", "ssn:hasValue", Literal('a "quoted" value\nnewline')),
        Triple("obs1", "rdf:type", "ssn:Observation"),
    ])
    path = tmp_path / "t.nt"
    save(s, path)
    again = load_triples(path)
    assert again == s and list(again) == list(s)
    assert again.to_text() == path.read_text()


def test_corrupt_triple_line_reports_line(tmp_path):
    path = tmp_path / "t.nt"
    path.write_text("a p b .\na p c\n")
    with pytest.raises(CorruptFile) as info:
        load_triples(path)
    assert info.value.line == 2


def test_log_append_after_reload(tmp_path):
    path = tmp_path / "events.ndjson"
    log = EventLog(path)
    for i in range(5):
        assert log.append(EventKind.SENSOR, {"i": i}, t=i) == i
    reopened = EventLog(path)
    assert len(reopened) == 5
    assert reopened.append("IK", {"x": 1}, t=9) == 5
    assert [e.offset for e in load_log(path)] == list(range(6))


def test_log_lines_are_ndjson(tmp_path):
    path = tmp_path / "events.ndjson"
    EventLog(path).append(EventKind.COMPOSITE, {"name": "HighTemp"}, t=3600)
    obj = json.loads(path.read_text().splitlines()[0])
    assert obj == {"offset": 0, "kind": "COMPOSITE", "t": 3600, "payload": {"name": "HighTemp"}}


def test_log_offset_gap_is_corrupt(tmp_path):
    path = tmp_path / "events.ndjson"
    path.write_text(
        '{"offset":0,"kind":"IK","t":1,"payload":{}}\n'
        '{"offset":2,"kind":"IK","t":1,"payload":{}}\n'
    )
    with pytest.raises(CorruptFile) as info:
        EventLog(path)
    assert info.value.line == 2


def test_load_detects_format(tmp_path):
    log_path, nt_path = tmp_path / "e.ndjson", tmp_path / "t.nt"
    EventLog(log_path).append(EventKind.IK, {}, t=0)
    save(TripleStore([Triple("a", "b", "c")]), nt_path)
    assert isinstance(load(log_path), EventLog)
    assert isinstance(load(nt_path), TripleStore)


def test_log_filters_by_kind():
    log = EventLog()
    log.append(EventKind.SENSOR, {}, t=0)
    log.append(EventKind.IK, {}, t=0)
    log.append(EventKind.SENSOR, {}, t=0)
    assert [e.offset for e in log.entries(EventKind.SENSOR)] == [0, 2]


def test_rwlock_readers_share_writers_exclude():
    lock = RWLock()
    inside = []
    barrier = threading.Barrier(3)

    def reader():
        with lock.read():
            inside.append(1)
            barrier.wait(timeout=2)

    threads = [threading.Thread(target=reader) for _ in range(3)]
    for th in threads:
        th.start()
    for th in threads:
        th.join(timeout=5)
    assert len(inside) == 3

    order = []

    def writer():
        with lock.write():
            order.append("w")

    with lock.read():
        th = threading.Thread(target=writer)
        th.start()
        time.sleep(0.05)
        order.append("r")
    th.join(timeout=5)
    assert order == ["r", "w"]


identifiers = st.from_regex(r"[a-z][a-zA-Z0-9:_]{0,6}", fullmatch=True)
objects = st.one_of(identifiers, st.text(min_size=1, max_size=8).map(Literal))
triples = st.builds(Triple, identifiers, identifiers, objects)


@settings(max_examples=200)
@given(st.lists(triples, max_size=40))
def test_store_round_trip_is_byte_stable(ts):
    s = TripleStore(ts)
    text = s.to_text()
    again = TripleStore.from_text(text)
    assert again == s
    assert again.to_text() == text
