import io

import pytest

from streamsim.errors import DataError, MissingColumn
from streamsim.io import load_schema, read_csv, read_log, write_csv
from streamsim.stream import Event

XES = """<?xml version="1.0" encoding="UTF-8"?>
<log xmlns="http://www.xes-standard.org/">
  <trace>
    <string key="concept:name" value="case-1"/>
    <event>
      <string key="concept:name" value="register"/>
      <string key="lifecycle:transition" value="start"/>
      <date key="time:timestamp" value="2024-01-01T09:00:00.000+00:00"/>
    </event>
    <event>
      <string key="concept:name" value="register"/>
      <string key="lifecycle:transition" value="complete"/>
      <string key="org:resource" value="ann"/>
      <float key="amount" value="250.0"/>
      <date key="time:timestamp" value="2024-01-01T09:10:00.000+00:00"/>
    </event>
    <event>
      <string key="concept:name" value="close"/>
      <date key="time:timestamp" value="2024-01-01T10:00:00.000+00:00"/>
    </event>
  </trace>
</log>
"""


def test_csv_roundtrip(tmp_path):
    events = [
        Event("c1", "a", 200, "ann", {"amount": 3.5, "tier": "gold"}, 100),
        Event("c2", "b", 300, "", {}, None),
    ]
    path = tmp_path / "log.csv"
    write_csv(events, path)
    back = read_csv(path)
    assert [(e.case_id, e.activity, e.resource, e.start_ts, e.timestamp) for e in back] == [
        ("c1", "a", "ann", 100, 200),
        ("c2", "b", "", 300, 300),
    ]
    assert back[0].attributes == {"amount": 3.5, "tier": "gold"}
    assert back[1].attributes == {}


def test_csv_sorted_and_blank_rows_skipped():
    text = "case_id,activity,resource,start_ts,end_ts\nc1,b,r,20,30\n\nc1,a,r,0,10\n"
    assert [e.activity for e in read_csv(io.StringIO(text))] == ["a", "b"]


def test_csv_missing_column():
    with pytest.raises(MissingColumn):
        read_csv(io.StringIO("case_id,resource,end_ts\nc1,r,5\n"))


def test_schema_file(tmp_path):
    cfg = tmp_path / "schema.toml"
    cfg.write_text('case = "Case"\nactivity = "Task"\ntimestamp = "Done"\nresource = "Who"\ndelimiter = ";"\n')
    schema, delim = load_schema(cfg)
    log = tmp_path / "log.csv"
    log.write_text("Case;Task;Done;Who;Note\nx;t1;2024-01-01T00:00:00Z;me;hello\n")
    (e,) = read_log(log, schema, delim)
    assert (e.case_id, e.activity, e.timestamp, e.resource, e.attributes) == ("x", "t1", 1704067200, "me", {"Note": "hello"})


def test_schema_unknown_key(tmp_path):
    cfg = tmp_path / "schema.json"
    cfg.write_text('{"case": "c", "colour": "x"}')
    with pytest.raises(DataError):
        load_schema(cfg)


def test_xes_subset(tmp_path):
    path = tmp_path / "log.xes"
    path.write_text(XES)
    reg, close = read_log(path)
    assert (reg.activity, reg.start, reg.timestamp, reg.resource) == ("register", 1704099600, 1704100200, "ann")
    assert reg.attributes == {"amount": 250.0}
    assert close.start is None and close.case_id == "case-1"
