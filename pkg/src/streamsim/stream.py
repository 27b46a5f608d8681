"""Event data model, sliding windows and trace-fragment assembly.

Timestamps are integer epoch seconds (UTC). An event's ``timestamp`` is its
completion time; ``start`` is optional and only present when the source log
records start/complete pairs.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

from .errors import MissingColumn, OutOfOrderEvent, SpanTooShort, UnparseableTimestamp

WEEK = 7 * 24 * 3600
DAY = 24 * 3600
HOUR = 3600

COMPLETE = "complete"
PREFIX = "prefix"
INFIX = "infix"
POSTFIX = "postfix"
FRAGMENT_KINDS = (COMPLETE, PREFIX, INFIX, POSTFIX)


@dataclass(frozen=True)
class Event:
    case_id: str
    activity: str
    timestamp: int
    resource: str = ""
    attributes: Mapping[str, object] = field(default_factory=dict)
    start: int | None = None

    def __post_init__(self):
        if not self.activity:
            raise ValueError("activity must be non-empty")
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp {self.timestamp}")
        if self.start is not None and self.start > self.timestamp:
            raise ValueError("start after completion")

    @property
    def start_ts(self) -> int:
        return self.timestamp if self.start is None else self.start


@dataclass(frozen=True)
class StreamWindow:
    start: int
    end: int
    events: tuple[Event, ...] = ()

    def __len__(self):
        return len(self.events)

    def case_ids(self) -> list[str]:
        seen = {}
        for e in self.events:
            seen.setdefault(e.case_id, None)
        return list(seen)


@dataclass(frozen=True)
class TraceFragment:
    case_id: str
    events: tuple[Event, ...]
    kind: str

    @property
    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)

    @property
    def open_start(self) -> bool:
        return self.kind in (POSTFIX, INFIX)

    @property
    def open_end(self) -> bool:
        return self.kind in (PREFIX, INFIX)


@dataclass(frozen=True)
class CompletionPolicy:
    """When is a case finished? An end activity was seen, or it went quiet.

    With no end activities and no timeout the 30-day default timeout applies.
    """

    end_activities: frozenset = frozenset()
    timeout: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "end_activities", frozenset(self.end_activities))
        if not self.end_activities and self.timeout is None:
            object.__setattr__(self, "timeout", 30 * DAY)
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def is_complete(self, last_activity: str, last_ts: int, now: int) -> bool:
        if last_activity in self.end_activities:
            return True
        return self.timeout is not None and now - last_ts >= self.timeout


@dataclass(frozen=True)
class CaseState:
    first_ts: int
    last_ts: int
    last_activity: str
    n_events: int


@dataclass(frozen=True)
class CaseLedger:
    """Carry-over state for cases still open at the last window boundary."""

    cases: Mapping[str, CaseState] = field(default_factory=dict)
    last_case_start: int | None = None

    def __contains__(self, case_id):
        return case_id in self.cases

    def get(self, case_id):
        return self.cases.get(case_id)


# --------------------------------------------------------------------------
# parsing

_EPOCH_RE = re.compile(r"^-?\d+(\.\d*)?$")


def parse_timestamp(value, line=None) -> int:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if not math.isfinite(value):
            raise UnparseableTimestamp(value, line)
        return int(value)
    text = str(value).strip()
    if not text:
        raise UnparseableTimestamp(value, line)
    if _EPOCH_RE.match(text):
        return int(float(text))
    iso = text
    if iso.endswith("Z") or iso.endswith("z"):
        iso = iso[:-1] + "+00:00"
    iso = iso.replace(" ", "T", 1) if "T" not in iso and " " in iso else iso
    try:
        dt = datetime.fromisoformat(iso)
    except ValueError:
        raise UnparseableTimestamp(value, line) from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return math.floor(dt.timestamp())


def _coerce_attribute(text):
    try:
        num = float(text)
    except (TypeError, ValueError):
        return text
    return num if math.isfinite(num) else text


@dataclass(frozen=True)
class Schema:
    """Column mapping for delimited input.

    Columns are given either as integer positions or as header names (in which
    case ``header`` must be provided to resolve them).
    """

    case: int | str = "case_id"
    activity: int | str = "activity"
    timestamp: int | str = "end_ts"
    resource: int | str | None = "resource"
    start: int | str | None = None
    header: tuple[str, ...] | None = None

    def resolve(self, header: Sequence[str] | None = None) -> "Schema":
        header = tuple(header) if header is not None else self.header

        def idx(col, required):
            if col is None:
                return None
            if isinstance(col, int):
                return col
            if header is None or col not in header:
                if required:
                    raise MissingColumn(col)
                return None
            return header.index(col)

        return Schema(
            case=idx(self.case, True),
            activity=idx(self.activity, True),
            timestamp=idx(self.timestamp, True),
            resource=idx(self.resource, False),
            start=idx(self.start, False),
            header=header,
        )


def parse_event_record(raw_record, schema: Schema, line: int | None = None, delimiter=",") -> Event:
    """Parse one delimited row into an Event.

    Columns not claimed by the schema become attributes (named after the header
    when available, else ``col<i>``). Empty attribute cells are dropped.
    """
    fields = raw_record.split(delimiter) if isinstance(raw_record, str) else list(raw_record)
    if schema.header is not None and not all(
        isinstance(c, int) or c is None for c in (schema.case, schema.activity, schema.timestamp)
    ):
        schema = schema.resolve()

    def get(col, name):
        if not isinstance(col, int) or col >= len(fields) or col < 0:
            raise MissingColumn(name, line)
        return fields[col].strip()

    case_id = get(schema.case, "case")
    activity = get(schema.activity, "activity")
    if not activity:
        raise MissingColumn("activity", line)
    if not case_id:
        raise MissingColumn("case", line)
    timestamp = parse_timestamp(get(schema.timestamp, "timestamp"), line)
    resource = ""
    if isinstance(schema.resource, int) and schema.resource < len(fields):
        resource = fields[schema.resource].strip()
    start = None
    if isinstance(schema.start, int) and schema.start < len(fields) and fields[schema.start].strip():
        start = parse_timestamp(fields[schema.start], line)
        start = min(start, timestamp)
    used = {c for c in (schema.case, schema.activity, schema.timestamp, schema.resource, schema.start) if isinstance(c, int)}
    attributes = {}
    for i, cell in enumerate(fields):
        if i in used:
            continue
        cell = cell.strip()
        if cell == "":
            continue
        name = schema.header[i] if schema.header is not None and i < len(schema.header) else f"col{i}"
        attributes[name] = _coerce_attribute(cell)
    return Event(case_id, activity, timestamp, resource, attributes, start)


# --------------------------------------------------------------------------
# windows


def check_order(events: Iterable[Event], slack: int = 0):
    """Yield events, raising OutOfOrderEvent if a timestamp regresses beyond slack."""
    high = None
    for n, e in enumerate(events):
        if high is not None and e.timestamp < high - slack:
            raise OutOfOrderEvent(
                f"event #{n} (case {e.case_id}) at {e.timestamp} precedes {high} by more than {slack}s"
            )
        high = e.timestamp if high is None else max(high, e.timestamp)
        yield e


def _sorted_window(events):
    return tuple(sorted(events, key=lambda e: (e.timestamp, e.case_id)))


def collect_window(stream: Iterable[Event], w: int, t: int, *, slack: int = 0, left_open: bool = False) -> StreamWindow:
    """Events with timestamp in [t - w, t] (or (t - w, t] when ``left_open``)."""
    if w <= 0:
        raise ValueError("window size must be positive")
    lo = t - w
    picked = []
    for e in check_order(stream, slack):
        ts = e.timestamp
        if ts > t + slack:
            break
        if (ts > lo if left_open else ts >= lo) and ts <= t:
            picked.append(e)
    return StreamWindow(lo, t, _sorted_window(picked))


def tile(events: Sequence[Event], boundaries: Sequence[tuple[int, int]], *, slack: int = 0) -> list[StreamWindow]:
    """Split a sorted event sequence into abutting windows.

    Every window is closed on the right; all but the first are open on the
    left, so an event on a shared boundary lands in the earlier window.
    """
    buckets: list[list[Event]] = [[] for _ in boundaries]
    j = 0
    for e in check_order(events, slack):
        while j < len(boundaries) and e.timestamp > boundaries[j][1]:
            j += 1
        if j == len(boundaries):
            break
        if e.timestamp < boundaries[j][0]:
            continue
        buckets[j].append(e)
    return [StreamWindow(s, t, _sorted_window(b)) for (s, t), b in zip(boundaries, buckets)]


def assemble_fragments(window: StreamWindow, policy: CompletionPolicy, ledger: CaseLedger):
    """Group window events by case and classify each fragment.

    Returns ``(fragments, new_ledger)``; the input ledger is not modified.
    Cases left open in the ledger whose timeout elapsed by ``window.end`` are
    pruned without producing a fragment.
    """
    by_case: dict[str, list[Event]] = {}
    for e in window.events:
        by_case.setdefault(e.case_id, []).append(e)

    cases = dict(ledger.cases)
    fragments = []
    last_start = ledger.last_case_start
    for case_id, evs in by_case.items():
        prior = cases.get(case_id)
        started_inside = prior is None
        last = evs[-1]
        done = policy.is_complete(last.activity, last.timestamp, window.end)
        if started_inside:
            kind = COMPLETE if done else PREFIX
            first = evs[0].start_ts
            last_start = first if last_start is None else max(last_start, first)
        else:
            kind = POSTFIX if done else INFIX
        fragments.append(TraceFragment(case_id, tuple(evs), kind))
        if done:
            cases.pop(case_id, None)
        else:
            first_ts = evs[0].start_ts if prior is None else prior.first_ts
            n = len(evs) + (0 if prior is None else prior.n_events)
            cases[case_id] = CaseState(first_ts, last.timestamp, last.activity, n)

    for case_id in [c for c in cases if c not in by_case]:
        st = cases[case_id]
        if policy.timeout is not None and window.end - st.last_ts >= policy.timeout:
            del cases[case_id]
    return fragments, CaseLedger(cases, last_start)


def partition_into_windows(log_span: tuple[int, int], k: int) -> list[tuple[int, int]]:
    """Split ``[min_ts, max_ts]`` into ``k`` runs of whole weeks.

    The week count is ``ceil(span / WEEK)``; remainder weeks go to the earliest
    windows. The last boundary may extend past ``max_ts`` to a whole week.
    """
    lo, hi = log_span
    if k < 1:
        raise ValueError("k must be >= 1")
    if hi <= lo:
        raise SpanTooShort(f"empty span [{lo}, {hi}]")
    n_weeks = -(-(hi - lo) // WEEK)
    if n_weeks < k:
        raise SpanTooShort(f"{n_weeks} weeks cannot be split into {k} windows")
    base, rem = divmod(n_weeks, k)
    out = []
    cursor = lo
    for i in range(k):
        weeks = base + (1 if i < rem else 0)
        out.append((cursor, cursor + weeks * WEEK))
        cursor += weeks * WEEK
    return out


def group_cases(events: Iterable[Event]) -> dict[str, list[Event]]:
    cases: dict[str, list[Event]] = {}
    for e in events:
        cases.setdefault(e.case_id, []).append(e)
    for evs in cases.values():
        evs.sort(key=lambda e: (e.timestamp, e.start_ts))
    return cases


def shift_event(e: Event, delta: int) -> Event:
    return replace(e, timestamp=e.timestamp + delta, start=None if e.start is None else e.start + delta)
