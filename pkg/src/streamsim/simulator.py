"""Discrete-event simulation of a BPS model M = (N, D, P)."""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable

from .descriptive import DescriptiveSet, WeeklyCalendar, sample_attributes, sample_resource
from .errors import HorizonZero, InconsistentModel, MissingBranchModel
from .online.predictive import (
    PredictiveSet,
    arrival_features,
    branch_features,
    duration_features,
    waiting_features,
)
from .stream import Event
from .tree import ACT, AND, LOOP, SEQ, TAU, XOR, Node, ProcessTree, decision_points

MAX_LOOP_ITERATIONS = 50
DEFAULT_INTERARRIVAL = 3600.0


@dataclass(frozen=True)
class BpsModel:
    tree: ProcessTree
    descriptive: DescriptiveSet
    predictive: PredictiveSet
    version: tuple = (0, 0)  # (timestamp t_i, update counter i)

    @property
    def N(self):
        return self.tree

    @property
    def D(self):
        return self.descriptive

    @property
    def P(self):
        return self.predictive


@dataclass(frozen=True)
class SimConfig:
    start_time: int
    n_cases: int | None = None
    end_time: int | None = None
    rng_seed: int = 0
    replications: int = 5
    case_prefix: str = "sim-"

    def __post_init__(self):
        if (self.n_cases is None) == (self.end_time is None):
            raise ValueError("set exactly one of n_cases and end_time")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    def replication_seed(self, k: int) -> int:
        return self.rng_seed ^ k


@dataclass
class EventCalendar:
    """Pending simulation events keyed by time, plus per-resource busy-until."""

    queue: list = field(default_factory=list)
    busy_until: dict = field(default_factory=dict)
    now: int = 0
    always_open_fallbacks: int = 0
    _seq: int = 0

    def push(self, time: int, action: Callable, *args):
        self._seq += 1
        heapq.heappush(self.queue, (time, self._seq, action, args))

    def pop(self):
        time, _, action, args = heapq.heappop(self.queue)
        if time < self.now:
            raise RuntimeError("simulation clock went backwards")
        self.now = time
        return time, action, args

    def __len__(self):
        return len(self.queue)


def schedule_activity(cal: EventCalendar, res: str, ready_at: int, waiting: float, calendar: WeeklyCalendar | None) -> int:
    """Start time of an activity that becomes ready at ``ready_at``."""
    start = max(int(round(ready_at + max(0.0, waiting))), cal.busy_until.get(res, ready_at))
    if calendar is not None:
        if calendar.is_empty:
            cal.always_open_fallbacks += 1
        start = calendar.next_open(start)
    return start


def check_consistency(M: BpsModel) -> None:
    P = M.predictive
    problems = []
    missing = sorted(M.tree.alphabet - set(P.duration_models))
    if missing:
        problems.append(f"no duration model for {missing}")
    missing = sorted(set(M.descriptive.resources) - set(P.waiting_models))
    if missing:
        problems.append(f"no waiting model for {missing}")
    dps = {nid for nid, _ in decision_points(M.tree)}
    extra = sorted(set(P.branching_models) - dps)
    if extra:
        problems.append(f"branching models for unknown decision points {extra}")
    if problems:
        raise InconsistentModel("; ".join(problems))


def _choose(node: Node, sampler, rng, context) -> int:
    n = 2 if node.kind == LOOP else len(node.children)
    if sampler is None:
        raise MissingBranchModel(node.id)
    k = sampler(node.id, context, rng)
    if not isinstance(k, int) or not 0 <= k < n:
        k = rng.randrange(n)
    return k


def traverse(tree: ProcessTree, branching, rng: random.Random) -> list[str]:
    """One activity sequence through ``tree``.

    ``branching`` maps decision-point ids to samplers ``f(rng) -> child index``
    (loops: 0 exit, 1 redo), or is a single callable ``f(node_id, rng)``.
    Parallel branches interleave by exponential per-activity ready times.
    """

    def pick(node):
        if callable(branching):
            k = branching(node.id, rng)
        else:
            f = branching.get(node.id)
            if f is None:
                raise MissingBranchModel(node.id)
            k = f(rng) if callable(f) else _from_table(f, rng)
        n = 2 if node.kind == LOOP else len(node.children)
        return k if isinstance(k, int) and 0 <= k < n else rng.randrange(n)

    def run(node, t):
        if node.kind == ACT:
            t += rng.expovariate(1.0)
            return [(t, node.label)], t
        if node.kind == TAU:
            return [], t
        if node.kind == SEQ:
            out = []
            for c in node.children:
                part, t = run(c, t)
                out += part
            return out, t
        if node.kind == XOR:
            return run(node.children[pick(node)], t)
        if node.kind == AND:
            out, end = [], t
            for c in node.children:
                part, e = run(c, t)
                out += part
                end = max(end, e)
            return out, end
        out, t = run(node.children[0], t)
        for _ in range(MAX_LOOP_ITERATIONS):
            if pick(node) == 0:
                break
            part, t = run(node.children[1], t)
            out += part
            part, t = run(node.children[0], t)
            out += part
        return out, t

    timed, _ = run(tree.root, 0.0)
    return [a for _, a in sorted(timed, key=lambda p: p[0])]


def _from_table(table: dict, rng: random.Random) -> int:
    keys = sorted(table)
    return rng.choices(keys, weights=[table[k] for k in keys])[0]


class _Run:
    def __init__(self, M: BpsModel, cfg: SimConfig, seed: int):
        self.M = M
        self.cfg = cfg
        self.rng = random.Random(seed)
        self.cal = EventCalendar(now=cfg.start_time)
        self.events: list[Event] = []
        self.spawned = 0

    # -- model lookups ----------------------------------------------------------
    def _branch(self, node_id, context, rng):
        model = self.M.predictive.branching_models.get(node_id)
        if model is None:
            raise MissingBranchModel(node_id)
        prev, at, elapsed = context
        return model.sample(branch_features(prev, at, elapsed), rng)

    def _regress(self, model, x) -> float:
        if model is None:
            return 0.0
        y = model.sample(x, self.rng)
        return max(0.0, float(y)) if y is not None else 0.0

    # -- arrivals -----------------------------------------------------------------
    def _more_cases(self, at: int) -> bool:
        if self.cfg.n_cases is not None:
            return self.spawned < self.cfg.n_cases
        return at < self.cfg.end_time

    def arrive(self):
        t = self.cal.now
        k = self.spawned
        self.spawned += 1
        case = {"id": f"{self.cfg.case_prefix}{k}", "start": t, "prev": ""}
        self.execute(self.M.tree.root, case, t, lambda _t: None)
        gap = self.M.predictive.arrival_model.sample(arrival_features(t), self.rng)
        gap = DEFAULT_INTERARRIVAL if gap is None else max(0.0, float(gap))
        nxt = t + int(round(gap))
        if self._more_cases(nxt):
            self.cal.push(nxt, self.arrive)

    # -- control flow -----------------------------------------------------------------
    def execute(self, node: Node, case: dict, t: int, k):
        kind = node.kind
        if kind == ACT:
            self.cal.push(t, self.enable, node, case, k)
        elif kind == TAU:
            k(t)
        elif kind == SEQ:
            self._sequence(node.children, 0, case, t, k)
        elif kind == XOR:
            i = _choose(node, self._branch, self.rng, (case["prev"], t, t - case["start"]))
            self.execute(node.children[i], case, t, k)
        elif kind == AND:
            pending = [len(node.children), t]

            def join(done):
                pending[0] -= 1
                pending[1] = max(pending[1], done)
                if pending[0] == 0:
                    k(pending[1])

            for c in node.children:
                self.execute(c, case, t, join)
        else:
            self._loop(node, case, t, k, 0)

    def _sequence(self, children, i, case, t, k):
        if i == len(children):
            k(t)
            return
        self.execute(children[i], case, t, lambda done: self._sequence(children, i + 1, case, done, k))

    def _loop(self, node, case, t, k, iteration):
        def after_do(done):
            if iteration + 1 >= MAX_LOOP_ITERATIONS:
                k(done)
                return
            choice = _choose(node, self._branch, self.rng, (case["prev"], done, done - case["start"]))
            if choice == 0:
                k(done)
            else:
                self.execute(node.children[1], case, done, lambda d2: self._loop(node, case, d2, k, iteration + 1))

        self.execute(node.children[0], case, t, after_do)

    # -- activities ------------------------------------------------------------------------
    def enable(self, node: Node, case: dict, k):
        t = self.cal.now
        a = node.label
        D, P = self.M.descriptive, self.M.predictive
        res = self._allocate(a, t)
        wait = self._regress(P.waiting_models.get(res), waiting_features(a, t)) if res else 0.0
        calendar = D.resources[res].calendar if res else None
        start = schedule_activity(self.cal, res, t, wait, calendar) if res else t
        dur = self._regress(P.duration_models.get(a), duration_features(res, start, start - case["start"]))
        end = start + int(round(dur))
        if res:
            self.cal.busy_until[res] = end
        attrs = sample_attributes(D, a, self.rng)
        self.events.append(Event(case["id"], a, end, res, attrs, start))
        self.cal.push(end, self.complete, case, a, k)

    def _allocate(self, activity: str, t: int) -> str:
        """The capable resource that can start earliest; ties are drawn by
        capability frequency times calendar weight."""
        busy = self.cal.busy_until
        capable = {r: p for r, p in self.M.descriptive.resources.items() if p.activities.get(activity)}
        if not capable:
            return ""
        ready = {r: p.calendar.next_open(max(t, busy.get(r, t))) for r, p in capable.items()}
        first = min(ready.values())
        return sample_resource({r: p for r, p in capable.items() if ready[r] == first}, activity, t, self.rng)

    def complete(self, case, activity, k):
        case["prev"] = activity
        k(self.cal.now)

    def run(self) -> list[Event]:
        if self._more_cases(self.cfg.start_time):
            self.cal.push(self.cfg.start_time, self.arrive)
        while self.cal:
            _, action, args = self.cal.pop()
            action(*args)
        return sorted(self.events, key=lambda e: (e.start_ts, e.timestamp, _case_index(e.case_id), e.activity))


def _case_index(case_id: str):
    tail = case_id.rsplit("-", 1)[-1]
    return (0, int(tail)) if tail.isdigit() else (1, case_id)


def simulate(M: BpsModel, cfg: SimConfig, *, replication: int = 0) -> list[Event]:
    """One simulated log. Replication ``k`` uses seed ``cfg.rng_seed ^ k``."""
    if (cfg.n_cases is not None and cfg.n_cases <= 0) or (cfg.end_time is not None and cfg.end_time <= cfg.start_time):
        raise HorizonZero("simulation horizon is empty")
    check_consistency(M)
    return _Run(M, cfg, cfg.replication_seed(replication)).run()


def simulate_replications(M: BpsModel, cfg: SimConfig) -> list[list[Event]]:
    return [simulate(M, cfg, replication=k) for k in range(cfg.replications)]


__all__ = [
    "BpsModel",
    "SimConfig",
    "EventCalendar",
    "schedule_activity",
    "traverse",
    "simulate",
    "simulate_replications",
    "check_consistency",
    "MAX_LOOP_ITERATIONS",
]
