"""The predictive parameter set: one adaptive tree per activity (durations),
per resource (waiting times), per decision point (branching) and one for case
inter-arrival times."""
from __future__ import annotations

import copy
import zlib
from dataclasses import dataclass, field

from ..alignment import align
from ..descriptive import DescriptiveSet, hour_of_week
from ..errors import StateSpaceBudgetExceeded
from ..stream import COMPLETE, PREFIX, CaseLedger, CompletionPolicy, StreamWindow, assemble_fragments
from ..tree import LOOP, XOR, ProcessTree, decision_points
from .hat import CATEGORICAL, CLASSIFICATION, NUMERIC, REGRESSION, HoeffdingAdaptiveTree
from .hoeffding import HoeffdingBoundParams

DURATION_FEATURES = (("resource", CATEGORICAL), ("hour_of_week", NUMERIC), ("elapsed", NUMERIC))
WAITING_FEATURES = (("activity", CATEGORICAL), ("hour_of_week", NUMERIC))
ARRIVAL_FEATURES = (("hour_of_week", NUMERIC), ("day_of_week", NUMERIC))
BRANCH_FEATURES = (("prev_activity", CATEGORICAL), ("hour_of_week", NUMERIC), ("elapsed", NUMERIC))

DURATION_QUANTILE_CAP = 0.99


def duration_features(resource: str, at: int, elapsed: float) -> dict:
    return {"resource": resource, "hour_of_week": hour_of_week(at), "elapsed": float(elapsed)}


def waiting_features(activity: str, at: int) -> dict:
    return {"activity": activity, "hour_of_week": hour_of_week(at)}


def arrival_features(at: int) -> dict:
    how = hour_of_week(at)
    return {"hour_of_week": how, "day_of_week": how // 24}


def branch_features(prev_activity: str, at: int, elapsed: float) -> dict:
    return {"prev_activity": prev_activity, "hour_of_week": hour_of_week(at), "elapsed": float(elapsed)}


@dataclass
class TrainingInstances:
    durations: dict = field(default_factory=dict)  # activity -> [(x, seconds)]
    waiting: dict = field(default_factory=dict)  # resource -> [(x, seconds)]
    arrivals: list = field(default_factory=list)  # [(x, seconds)]
    branching: dict = field(default_factory=dict)  # decision point id -> [(x, child index)]
    unalignable: int = 0
    gap_durations: int = 0
    capped_durations: int = 0

    def __len__(self):
        return (
            sum(map(len, self.durations.values()))
            + sum(map(len, self.waiting.values()))
            + len(self.arrivals)
            + sum(map(len, self.branching.values()))
        )

    def extend(self, other: "TrainingInstances"):
        for mine, theirs in ((self.durations, other.durations), (self.waiting, other.waiting), (self.branching, other.branching)):
            for k, v in theirs.items():
                mine.setdefault(k, []).extend(v)
        self.arrivals.extend(other.arrivals)
        self.unalignable += other.unalignable
        self.gap_durations += other.gap_durations
        self.capped_durations += other.capped_durations


def _quantile(values, q):
    values = sorted(values)
    if not values:
        return None
    k = min(len(values) - 1, max(0, int(round(q * (len(values) - 1)))))
    return values[k]


def build_training_instances(
    window: StreamWindow,
    tree: ProcessTree,
    D: DescriptiveSet | None = None,
    *,
    fragments=None,
    ledger: CaseLedger | None = None,
    policy: CompletionPolicy | None = None,
) -> TrainingInstances:
    """Targets for every predictive model from one window.

    ``ledger`` is the state *before* the window (used for cases that started
    earlier and to chain arrivals across windows). Events without a recorded
    start get a duration equal to the gap since the previous event of their
    case, capped at the window's 99th percentile of such gaps.
    """
    ledger = ledger or CaseLedger()
    if fragments is None:
        fragments, _ = assemble_fragments(window, policy or CompletionPolicy(), ledger)
    out = TrainingInstances()

    # arrivals
    starts = sorted(f.events[0].start_ts for f in fragments if f.kind in (COMPLETE, PREFIX))
    prev = ledger.last_case_start
    for s in starts:
        if prev is not None and s >= prev:
            out.arrivals.append((arrival_features(prev), float(s - prev)))
        prev = s

    gap_durations = []
    for frag in fragments:
        prior = ledger.get(frag.case_id)
        case_start = prior.first_ts if prior is not None else frag.events[0].start_ts
        completions = [prior.last_ts] if prior is not None else []
        for e in frag.events:
            enabled_at = max((c for c in completions if c <= e.start_ts), default=None)
            if e.start is not None:
                dur = float(e.timestamp - e.start)
                out.durations.setdefault(e.activity, []).append(
                    (duration_features(e.resource, e.start, e.start - case_start), dur)
                )
                if e.resource and enabled_at is not None:
                    out.waiting.setdefault(e.resource, []).append(
                        (waiting_features(e.activity, enabled_at), float(e.start - enabled_at))
                    )
            elif completions:
                last = max(completions)
                gap_durations.append((e, float(e.timestamp - last), last - case_start))
            completions.append(e.timestamp)

    if gap_durations:
        cap = _quantile([g for _, g, _ in gap_durations], DURATION_QUANTILE_CAP)
        out.gap_durations = len(gap_durations)
        for e, g, elapsed in gap_durations:
            if g > cap:
                out.capped_durations += 1
                g = cap
            out.durations.setdefault(e.activity, []).append(
                (duration_features(e.resource, e.timestamp - int(g), elapsed), g)
            )

    # branching, from optimal alignments
    dps = {nid for nid, _ in decision_points(tree)}
    cache: dict = {}
    for frag in fragments:
        key = (frag.activities, frag.kind)
        if key not in cache:
            try:
                cache[key] = align(tree, frag.activities, frag.kind)
            except StateSpaceBudgetExceeded:
                cache[key] = None
        al = cache[key]
        if al is None:
            out.unalignable += 1
            continue
        prior = ledger.get(frag.case_id)
        case_start = prior.first_ts if prior is not None else frag.events[0].start_ts
        prev_act = prior.last_activity if prior is not None else ""
        now = prior.last_ts if prior is not None else case_start
        consumed = 0
        events = frag.events
        for move in al.moves:
            if move.kind in ("sync", "log"):
                e = events[consumed]
                consumed += 1
                if move.kind == "sync":
                    prev_act = e.activity
                now = e.timestamp
                continue
            t = move.transition
            if al.open_start and consumed == 0:
                continue
            if t.node_id not in dps:
                continue
            if (t.role == "choose") or (t.role in ("exit", "redo")):
                out.branching.setdefault(t.node_id, []).append(
                    (branch_features(prev_act, now, now - case_start), t.choice)
                )
    return out


def _seed(*parts) -> int:
    return zlib.crc32("\x00".join(map(str, parts)).encode())


@dataclass
class PredictiveSet:
    params: HoeffdingBoundParams = field(default_factory=HoeffdingBoundParams)
    duration_models: dict = field(default_factory=dict)
    waiting_models: dict = field(default_factory=dict)
    arrival_model: HoeffdingAdaptiveTree | None = None
    branching_models: dict = field(default_factory=dict)
    drift_detection: bool = True

    def __post_init__(self):
        if self.arrival_model is None:
            self.arrival_model = self._new(REGRESSION, ARRIVAL_FEATURES, "arrival")

    def _new(self, task, features, *key) -> HoeffdingAdaptiveTree:
        return HoeffdingAdaptiveTree(
            task, features, self.params, drift_detection=self.drift_detection, seed=_seed(*key)
        )

    def snapshot(self) -> "PredictiveSet":
        return copy.deepcopy(self)

    def sync_keys(self, tree: ProcessTree, D: DescriptiveSet) -> None:
        """Create models for new elements, drop models for vanished ones."""
        acts = tree.alphabet
        for a in sorted(acts - set(self.duration_models)):
            self.duration_models[a] = self._new(REGRESSION, DURATION_FEATURES, "duration", a)
        for a in set(self.duration_models) - acts:
            del self.duration_models[a]
        resources = set(D.resources)
        for r in sorted(resources - set(self.waiting_models)):
            self.waiting_models[r] = self._new(REGRESSION, WAITING_FEATURES, "waiting", r)
        for r in set(self.waiting_models) - resources:
            del self.waiting_models[r]
        dps = {nid for nid, _ in decision_points(tree)}
        for nid in sorted(dps - set(self.branching_models)):
            self.branching_models[nid] = self._new(CLASSIFICATION, BRANCH_FEATURES, "branch", nid)
        for nid in set(self.branching_models) - dps:
            del self.branching_models[nid]

    def learn(self, instances: TrainingInstances) -> None:
        for a, rows in sorted(instances.durations.items()):
            model = self.duration_models.get(a)
            if model is not None:
                for x, y in rows:
                    model.learn_one(x, y)
        for r, rows in sorted(instances.waiting.items()):
            model = self.waiting_models.get(r)
            if model is not None:
                for x, y in rows:
                    model.learn_one(x, y)
        for x, y in instances.arrivals:
            self.arrival_model.learn_one(x, y)
        for nid, rows in sorted(instances.branching.items()):
            model = self.branching_models.get(nid)
            if model is not None:
                for x, y in rows:
                    model.learn_one(x, y)

    def fit_batch(self, instances: TrainingInstances) -> None:
        for a, rows in sorted(instances.durations.items()):
            if a in self.duration_models:
                self.duration_models[a].fit_batch(rows)
        for r, rows in sorted(instances.waiting.items()):
            if r in self.waiting_models:
                self.waiting_models[r].fit_batch(rows)
        self.arrival_model.fit_batch(instances.arrivals)
        for nid, rows in sorted(instances.branching.items()):
            if nid in self.branching_models:
                self.branching_models[nid].fit_batch(rows)

    def all_models(self):
        yield "arrival", self.arrival_model
        for a, m in sorted(self.duration_models.items()):
            yield f"duration:{a}", m
        for r, m in sorted(self.waiting_models.items()):
            yield f"waiting:{r}", m
        for nid, m in sorted(self.branching_models.items()):
            yield f"branch:{nid}", m

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "grace_period": self.params.grace_period,
            "max_depth": self.params.max_depth,
            "models": {name: m.to_dict() for name, m in self.all_models()},
        }


def update_predictive_set(
    P: PredictiveSet,
    instances: TrainingInstances,
    tree: ProcessTree,
    D: DescriptiveSet,
    params: HoeffdingBoundParams | None = None,
    *,
    copy_models: bool = True,
) -> PredictiveSet:
    """Spawn models for new elements of (N, D) and feed every instance.

    With ``copy_models`` the input set is left untouched and a new one returned.
    """
    out = P.snapshot() if copy_models else P
    if params is not None and params != out.params:
        out.params = params
    out.sync_keys(tree, D)
    out.learn(instances)
    return out


__all__ = [
    "PredictiveSet",
    "TrainingInstances",
    "build_training_instances",
    "update_predictive_set",
    "duration_features",
    "waiting_features",
    "arrival_features",
    "branch_features",
    "XOR",
    "LOOP",
]
