"""Descriptive parameters: resource pool, weekly calendars, attribute models."""
from __future__ import annotations

import bisect
import copy
import random
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .errors import NoCapableResource
from .stream import DAY, HOUR, WEEK, StreamWindow

SLOTS = 168
RESERVOIR_CAP = 10_000
MIN_EVENTS_FOR_CALENDAR = 5


def hour_of_week(ts: int) -> int:
    """Slot index 0..167 with Monday 00:00 UTC as slot 0 (epoch day 0 is a Thursday)."""
    day = (ts // DAY + 3) % 7
    return day * 24 + (ts % DAY) // HOUR


def week_start(ts: int) -> int:
    """Timestamp of the Monday 00:00 at or before ``ts``."""
    return ts - hour_of_week(ts) * HOUR - ts % HOUR


@dataclass(frozen=True)
class WeeklyCalendar:
    weights: tuple[float, ...] = (0.0,) * SLOTS

    def __post_init__(self):
        if len(self.weights) != SLOTS:
            raise ValueError("calendar needs 168 slots")

    def weight_at(self, ts: int) -> float:
        return self.weights[hour_of_week(ts)]

    @property
    def is_empty(self) -> bool:
        return not any(self.weights)

    def next_open(self, ts: int) -> int:
        """Earliest time >= ts inside a slot with positive weight.

        An all-zero calendar is treated as always open.
        """
        if self.is_empty or self.weights[hour_of_week(ts)] > 0:
            return ts
        slot = hour_of_week(ts)
        base = ts - ts % HOUR
        for k in range(1, SLOTS + 1):
            if self.weights[(slot + k) % SLOTS] > 0:
                return base + k * HOUR
        return ts

    def open_slots(self) -> list[int]:
        return [i for i, w in enumerate(self.weights) if w > 0]


def calendar_from_events(timestamps: Iterable[int]) -> WeeklyCalendar:
    counts = [0] * SLOTS
    for ts in timestamps:
        counts[hour_of_week(ts)] += 1
    top = max(counts)
    if top == 0:
        return WeeklyCalendar()
    return WeeklyCalendar(tuple(c / top for c in counts))


@dataclass
class ResourceProfile:
    activities: Counter = field(default_factory=Counter)
    events: int = 0
    calendar: WeeklyCalendar = field(default_factory=WeeklyCalendar)


@dataclass
class CategoricalModel:
    counts: Counter = field(default_factory=Counter)

    def update(self, value):
        self.counts[value] += 1

    def probabilities(self) -> dict:
        total = sum(self.counts.values())
        return {k: v / total for k, v in self.counts.items()}

    def sample(self, rng: random.Random):
        keys = sorted(self.counts, key=str)
        return rng.choices(keys, weights=[self.counts[k] for k in keys])[0]


@dataclass
class NumericModel:
    """Uniform reservoir (algorithm R) kept in sorted order."""

    cap: int = RESERVOIR_CAP
    values: list = field(default_factory=list)
    seen: int = 0
    seed: int = 0

    def __post_init__(self):
        self._rng = random.Random(self.seed)

    def update(self, x: float):
        self.seen += 1
        if len(self.values) < self.cap:
            bisect.insort(self.values, x)
            return
        j = self._rng.randrange(self.seen)
        if j < self.cap:
            del self.values[j]
            bisect.insort(self.values, x)

    def sample(self, rng: random.Random) -> float:
        return self.values[rng.randrange(len(self.values))]


@dataclass
class DescriptiveSet:
    resources: dict[str, ResourceProfile] = field(default_factory=dict)
    attributes: dict[str, dict[str, object]] = field(default_factory=dict)

    def copy(self) -> "DescriptiveSet":
        return copy.deepcopy(self)

    def capable(self, activity: str) -> list[str]:
        return sorted(r for r, p in self.resources.items() if p.activities.get(activity))

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "resources": {
                r: {
                    "activities": dict(sorted(p.activities.items())),
                    "events": p.events,
                    "calendar": list(p.calendar.weights),
                }
                for r, p in sorted(self.resources.items())
            },
            "attributes": {
                a: {
                    name: (
                        {"type": "categorical", "counts": {str(k): v for k, v in m.counts.items()}}
                        if isinstance(m, CategoricalModel)
                        else {"type": "numeric", "values": m.values, "seen": m.seen, "cap": m.cap, "seed": m.seed}
                    )
                    for name, m in sorted(models.items())
                }
                for a, models in sorted(self.attributes.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DescriptiveSet":
        d = cls()
        for r, p in data.get("resources", {}).items():
            d.resources[r] = ResourceProfile(Counter(p["activities"]), p["events"], WeeklyCalendar(tuple(p["calendar"])))
        for a, models in data.get("attributes", {}).items():
            for name, m in models.items():
                if m["type"] == "categorical":
                    model = CategoricalModel(Counter(m["counts"]))
                else:
                    model = NumericModel(m["cap"], list(m["values"]), m["seen"], m["seed"])
                d.attributes.setdefault(a, {})[name] = model
        return d


def _attribute_seed(activity: str, name: str) -> int:
    return zlib.crc32(f"{activity}\x00{name}".encode())


def update_descriptive(D: DescriptiveSet, window: StreamWindow | Iterable, *, min_events: int = MIN_EVENTS_FOR_CALENDAR) -> DescriptiveSet:
    """Fold one window of events into a copy of ``D``.

    Capabilities and attribute models accumulate. Calendars of new resources
    come from their window events; existing resources get a recomputed
    calendar only when they have at least ``min_events`` events in the window.
    """
    events = window.events if isinstance(window, StreamWindow) else list(window)
    if not events:
        return D
    out = D.copy()
    stamps: dict[str, list[int]] = {}
    for e in events:
        if e.resource:
            prof = out.resources.get(e.resource)
            if prof is None:
                prof = out.resources[e.resource] = ResourceProfile()
            prof.activities[e.activity] += 1
            prof.events += 1
            stamps.setdefault(e.resource, []).append(e.start_ts)
        for name, value in e.attributes.items():
            models = out.attributes.setdefault(e.activity, {})
            model = models.get(name)
            numeric = isinstance(value, (int, float)) and not isinstance(value, bool)
            if model is None:
                model = NumericModel(seed=_attribute_seed(e.activity, name)) if numeric else CategoricalModel()
                models[name] = model
            if isinstance(model, NumericModel) and not numeric:
                continue
            model.update(float(value) if isinstance(model, NumericModel) else value)
    for r, ts in stamps.items():
        if r not in D.resources or len(ts) >= min_events:
            out.resources[r].calendar = calendar_from_events(ts)
    return out


def sample_resource(pool: DescriptiveSet | dict, activity: str, at: int, rng: random.Random) -> str:
    resources = pool.resources if isinstance(pool, DescriptiveSet) else pool
    names = sorted(r for r, p in resources.items() if p.activities.get(activity))
    if not names:
        raise NoCapableResource(activity)
    if len(names) == 1:
        return names[0]
    freq = [resources[r].activities[activity] for r in names]
    weights = [f * resources[r].calendar.weight_at(at) for r, f in zip(names, freq)]
    if not any(weights):
        weights = freq
    return rng.choices(names, weights=weights)[0]


def sample_attributes(models: DescriptiveSet | dict, activity: str, rng: random.Random) -> dict:
    table = models.attributes if isinstance(models, DescriptiveSet) else models
    out = {}
    for name, model in sorted(table.get(activity, {}).items()):
        if isinstance(model, NumericModel) and not model.values:
            continue
        out[name] = model.sample(rng)
    return out


__all__ = [
    "SLOTS",
    "WEEK",
    "WeeklyCalendar",
    "ResourceProfile",
    "CategoricalModel",
    "NumericModel",
    "DescriptiveSet",
    "calendar_from_events",
    "hour_of_week",
    "week_start",
    "update_descriptive",
    "sample_resource",
    "sample_attributes",
]
