"""Log readers and writers: CSV (configurable), an XES subset, and the
simulator's output schema."""
from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable

from .errors import DataError, MissingColumn
from .stream import Event, Schema, parse_event_record, parse_timestamp

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

LOG_COLUMNS = ("case_id", "activity", "resource", "start_ts", "end_ts")
DEFAULT_SCHEMA = Schema(case="case_id", activity="activity", timestamp="end_ts", resource="resource", start="start_ts")


def load_schema(path) -> tuple[Schema, str]:
    """Read a column mapping from a TOML or JSON file.

    Recognised keys: case, activity, timestamp, resource, start, delimiter.
    """
    path = Path(path)
    text = path.read_text()
    cfg = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    cfg = cfg.get("schema", cfg)
    delimiter = cfg.pop("delimiter", ",")
    unknown = set(cfg) - {"case", "activity", "timestamp", "resource", "start"}
    if unknown:
        raise DataError(f"unknown schema keys: {sorted(unknown)}")
    return Schema(
        case=cfg.get("case", "case_id"),
        activity=cfg.get("activity", "activity"),
        timestamp=cfg.get("timestamp", "end_ts"),
        resource=cfg.get("resource"),
        start=cfg.get("start"),
    ), delimiter


def read_csv(source, schema: Schema = DEFAULT_SCHEMA, delimiter: str = ",") -> list[Event]:
    """Read a delimited log with a header row; events are returned sorted by time."""
    handle = source if hasattr(source, "read") else open(source, newline="")
    with handle:
        reader = csv.reader(handle, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            return []
        resolved = schema.resolve([h.strip() for h in header])
        events = [
            parse_event_record(row, resolved, line=n)
            for n, row in enumerate(reader, start=2)
            if any(cell.strip() for cell in row)
        ]
    events.sort(key=lambda e: (e.timestamp, e.case_id))
    return events


def _fmt(value):
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def write_csv(events: Iterable[Event], target) -> None:
    """Write events in the simulator schema (also readable by ``read_csv``)."""
    events = list(events)
    extra = sorted({k for e in events for k in e.attributes})
    own = not hasattr(target, "write")
    handle = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(LOG_COLUMNS) + extra)
        for e in events:
            writer.writerow(
                [e.case_id, e.activity, e.resource, e.start_ts, e.timestamp]
                + [_fmt(e.attributes[k]) if k in e.attributes else "" for k in extra]
            )
    finally:
        if own:
            handle.close()


def _xes_value(el):
    tag = el.tag.rsplit("}", 1)[-1]
    val = el.get("value")
    if tag == "date":
        return parse_timestamp(val)
    if tag in ("int", "float"):
        try:
            return float(val)
        except (TypeError, ValueError):
            return val
    return val


def read_xes(path) -> list[Event]:
    """Read the subset of XES used by public logs.

    Traces are grouped by their ``concept:name``. Events need ``concept:name``
    and ``time:timestamp``; a ``lifecycle:transition`` of ``start`` is paired
    with the next ``complete`` of the same activity to fill ``Event.start``.
    """
    events: list[Event] = []
    tree = ET.parse(path)
    for trace in tree.getroot():
        if trace.tag.rsplit("}", 1)[-1] != "trace":
            continue
        case_id = None
        for child in trace:
            tag = child.tag.rsplit("}", 1)[-1]
            if tag != "event" and child.get("key") == "concept:name":
                case_id = child.get("value")
        if case_id is None:
            raise MissingColumn("concept:name")
        pending: dict[str, list[int]] = {}
        for ev in trace:
            if ev.tag.rsplit("}", 1)[-1] != "event":
                continue
            attrs = {a.get("key"): _xes_value(a) for a in ev}
            activity = attrs.pop("concept:name", None)
            ts = attrs.pop("time:timestamp", None)
            if activity is None:
                raise MissingColumn("concept:name")
            if ts is None:
                raise MissingColumn("time:timestamp")
            resource = attrs.pop("org:resource", "") or ""
            transition = str(attrs.pop("lifecycle:transition", "complete")).lower()
            if transition == "start":
                pending.setdefault(activity, []).append(ts)
                continue
            start = None
            if pending.get(activity):
                start = min(pending[activity].pop(0), ts)
            attrs = {k: v for k, v in attrs.items() if isinstance(v, (str, float))}
            events.append(Event(case_id, activity, ts, str(resource), attrs, start))
    events.sort(key=lambda e: (e.timestamp, e.case_id))
    return events


def read_log(path, schema: Schema = DEFAULT_SCHEMA, delimiter: str = ",") -> list[Event]:
    path = Path(path)
    if path.suffix.lower() == ".xes":
        return read_xes(path)
    return read_csv(path, schema, delimiter)
