"""Experiment protocol: windows, the three discovery techniques and evaluation.

Windows ``W_1..W_k`` tile the log span in whole weeks. After every window
``t_i`` (i < k) each technique yields a model that is simulated and compared
with the complete traces starting in ``W_{i+1}``.
"""
from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .descriptive import DescriptiveSet, update_descriptive
from .discovery import discover_initial_tree
from .errors import NoCompleteTraces, PlanError
from .io import DEFAULT_SCHEMA, load_schema, read_log
from .metrics import DistanceReport, evaluate_pair
from .online.hoeffding import HoeffdingBoundParams
from .online.predictive import PredictiveSet, build_training_instances, update_predictive_set
from .repair import repair_fragments
from .simulator import BpsModel, SimConfig, simulate
from .stream import (
    COMPLETE,
    DAY,
    CaseLedger,
    CompletionPolicy,
    Event,
    StreamWindow,
    assemble_fragments,
    partition_into_windows,
    tile,
)

log = logging.getLogger(__name__)

SINGLE_BATCH = "single_batch"
LAST_BATCH = "last_batch"
ONLINE = "online"
TECHNIQUES = (SINGLE_BATCH, LAST_BATCH, ONLINE)
GRACE_PERIODS = (100, 500, 1000, 5000, 10000, 50000)


@dataclass(frozen=True)
class ExperimentPlan:
    log_path: str | None = None
    schema_path: str | None = None
    k: int = 10
    techniques: tuple = TECHNIQUES
    replications: int = 5
    grace_period: int = 100
    grace_periods: tuple = GRACE_PERIODS
    max_depth: int = 5
    noise_threshold: float = 0.2
    end_activities: tuple = ()
    timeout: int | None = None
    seed: int = 0
    output_dir: str = "runs"
    evaluate_windows: tuple | None = None  # 1-based t_i indices to evaluate; None = all

    def __post_init__(self):
        if self.k < 2:
            raise PlanError("k must be at least 2")
        if not self.techniques:
            raise PlanError("at least one technique is required")
        bad = [t for t in self.techniques if t not in TECHNIQUES]
        if bad:
            raise PlanError(f"unknown techniques {bad}")
        if self.replications < 1:
            raise PlanError("replications must be >= 1")

    @property
    def policy(self) -> CompletionPolicy:
        return CompletionPolicy(frozenset(self.end_activities), self.timeout)

    @property
    def params(self) -> HoeffdingBoundParams:
        return HoeffdingBoundParams(grace_period=self.grace_period, max_depth=self.max_depth)

    def with_grace(self, g: int) -> "ExperimentPlan":
        return replace(self, grace_period=g)


def load_plan(path) -> ExperimentPlan:
    """Read a TOML plan; relative paths are resolved against the plan's folder."""
    from .io import tomllib

    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise PlanError(f"cannot read plan {path}: {exc}") from exc
    base = path.parent
    inp = data.get("input", {})
    exp = data.get("experiment", {})
    comp = data.get("completion", {})
    out = data.get("output", {})

    def resolve(p):
        return None if p is None else str((base / p).resolve())

    known = {"k", "techniques", "replications", "grace_period", "grace_periods", "max_depth", "noise_threshold", "seed", "evaluate_windows"}
    unknown = set(exp) - known
    if unknown:
        raise PlanError(f"unknown experiment keys {sorted(unknown)}")
    if "path" not in inp:
        raise PlanError("plan needs input.path")
    timeout = comp.get("timeout_days")
    try:
        return ExperimentPlan(
            log_path=resolve(inp["path"]),
            schema_path=resolve(inp.get("schema")),
            k=int(exp.get("k", 10)),
            techniques=tuple(exp.get("techniques", TECHNIQUES)),
            replications=int(exp.get("replications", 5)),
            grace_period=int(exp.get("grace_period", 100)),
            grace_periods=tuple(int(g) for g in exp.get("grace_periods", GRACE_PERIODS)),
            max_depth=int(exp.get("max_depth", 5)),
            noise_threshold=float(exp.get("noise_threshold", 0.2)),
            end_activities=tuple(comp.get("end_activities", ())),
            timeout=None if timeout is None else int(float(timeout) * DAY),
            seed=int(exp.get("seed", 0)),
            output_dir=resolve(out.get("dir", "runs")),
            evaluate_windows=None if "evaluate_windows" not in exp else tuple(int(i) for i in exp["evaluate_windows"]),
        )
    except (TypeError, ValueError) as exc:
        raise PlanError(str(exc)) from exc


# --------------------------------------------------------------------------
# windows


@dataclass
class Protocol:
    """Windows of one log plus the case ledger after each of them."""

    windows: list
    ledgers: list  # ledgers[i] = state after W_1..W_i (ledgers[0] is empty)
    policy: CompletionPolicy
    reads: list = field(default_factory=list)  # window indices handed out, for leakage checks

    @classmethod
    def from_events(cls, events: Sequence[Event], k: int, policy: CompletionPolicy) -> "Protocol":
        events = sorted(events, key=lambda e: (e.timestamp, e.case_id))
        lo = min(e.start_ts for e in events)
        hi = max(e.timestamp for e in events)
        windows = tile(events, partition_into_windows((lo, hi), k))
        ledgers = [CaseLedger()]
        for w in windows:
            ledgers.append(assemble_fragments(w, policy, ledgers[-1])[1])
        return cls(windows, ledgers, policy)

    @property
    def k(self) -> int:
        return len(self.windows)

    def window(self, i: int) -> StreamWindow:
        """W_i, 1-based."""
        self.reads.append(i)
        return self.windows[i - 1]

    def complete_traces(self, first: int, last: int) -> list:
        """Complete fragments of cases that start in W_first and end by W_last."""
        ws = [self.window(j) for j in range(first, last + 1)]
        union = StreamWindow(ws[0].start, ws[-1].end, tuple(e for w in ws for e in w.events))
        frags, _ = assemble_fragments(union, self.policy, self.ledgers[first - 1])
        return [f for f in frags if f.kind == COMPLETE]

    def test_set(self, i: int) -> list[Event]:
        """Events of complete traces starting in W_{i+1}."""
        frags = self.complete_traces(i + 1, i + 1)
        return [e for f in frags for e in f.events]


# --------------------------------------------------------------------------
# model construction


def _seed(*parts) -> int:
    return zlib.crc32(":".join(map(str, parts)).encode())


def batch_model(fragments, params: HoeffdingBoundParams, *, noise_threshold: float = 0.2, version=(0, 0)) -> BpsModel:
    """Discover a full model from complete traces in one go."""
    if not fragments:
        raise NoCompleteTraces("no complete traces to learn from")
    tree = discover_initial_tree([f.activities for f in fragments], noise_threshold)
    D = update_descriptive(DescriptiveSet(), [e for f in fragments for e in f.events])
    P = PredictiveSet(params)
    P.sync_keys(tree, D)
    starts = sorted(f.events[0].start_ts for f in fragments)
    window = StreamWindow(starts[0], max(f.events[-1].timestamp for f in fragments), ())
    P.fit_batch(build_training_instances(window, tree, D, fragments=fragments))
    return BpsModel(tree, D, P, version)


@dataclass(frozen=True)
class AdvanceStats:
    fragments: int = 0
    repaired: int = 0
    rejected: int = 0
    unalignable: int = 0
    instances: int = 0


def advance(
    M: BpsModel,
    window: StreamWindow,
    policy: CompletionPolicy,
    params: HoeffdingBoundParams | None = None,
    *,
    ledger: CaseLedger | None = None,
) -> tuple[BpsModel, CaseLedger, AdvanceStats]:
    """One update step: fragments, control flow, descriptive, predictive.

    ``ledger`` is the case state before ``window``; the updated one is
    returned alongside the new model.
    """
    ledger = ledger or CaseLedger()
    version = (window.end, M.version[1] + 1)
    if not window.events:
        return replace(M, version=version), ledger, AdvanceStats()
    fragments, new_ledger = assemble_fragments(window, policy, ledger)
    tree, report = repair_fragments(M.tree, fragments)
    D = update_descriptive(M.descriptive, window)
    inst = build_training_instances(window, tree, D, fragments=fragments, ledger=ledger)
    P = update_predictive_set(M.predictive, inst, tree, D, params)
    stats = AdvanceStats(len(fragments), report.repaired, len(report.rejected), inst.unalignable, len(inst))
    return BpsModel(tree, D, P, version), new_ledger, stats


def run_single_batch(protocol: Protocol, i: int, plan: ExperimentPlan) -> BpsModel:
    if i < 1:
        raise ValueError("i must be >= 1")
    frags = protocol.complete_traces(1, i)
    return batch_model(frags, plan.params, noise_threshold=plan.noise_threshold, version=(protocol.windows[i - 1].end, i))


def run_last_batch(protocol: Protocol, i: int, plan: ExperimentPlan) -> BpsModel:
    frags = protocol.complete_traces(i, i)
    return batch_model(frags, plan.params, noise_threshold=plan.noise_threshold, version=(protocol.windows[i - 1].end, i))


def online_models(protocol: Protocol, plan: ExperimentPlan, upto: int | None = None):
    """Yield ``(i, M_{t_i}, stats)`` for i = 1..upto."""
    upto = upto or protocol.k
    M = run_single_batch(protocol, 1, plan)
    yield 1, M, None
    ledger = protocol.ledgers[1]
    for i in range(2, upto + 1):
        M, ledger, stats = advance(M, protocol.window(i), protocol.policy, plan.params, ledger=ledger)
        yield i, M, stats


# --------------------------------------------------------------------------
# runs


@dataclass
class TechniqueRun:
    technique: str
    versions: dict = field(default_factory=dict)  # i -> model version
    reports: dict = field(default_factory=dict)  # i -> [DistanceReport]
    skipped: dict = field(default_factory=dict)  # i -> reason
    stats: dict = field(default_factory=dict)  # i -> AdvanceStats

    def all_reports(self) -> list[DistanceReport]:
        return [r for i in sorted(self.reports) for r in self.reports[i]]


def evaluate_model(M: BpsModel, protocol: Protocol, i: int, plan: ExperimentPlan, technique: str) -> list[DistanceReport]:
    test = protocol.test_set(i)
    if not test:
        return []
    n = len({e.case_id for e in test})
    start = protocol.windows[i].start
    cfg = SimConfig(start, n_cases=n, rng_seed=_seed(plan.seed, technique, i), replications=plan.replications)
    out = []
    for r in range(cfg.replications):
        sim = simulate(M, cfg, replication=r)
        out.append(evaluate_pair(test, sim, window=i, technique=technique, replication=r))
    return out


def _eval_indices(plan: ExperimentPlan, k: int):
    idx = range(1, k)
    if plan.evaluate_windows is not None:
        idx = [i for i in idx if i in set(plan.evaluate_windows)]
    return list(idx)


def run_technique(protocol: Protocol, plan: ExperimentPlan, technique: str, *, label: str | None = None) -> TechniqueRun:
    run = TechniqueRun(label or technique)
    wanted = _eval_indices(plan, protocol.k)
    if not wanted:
        return run
    if technique == ONLINE:
        models = online_models(protocol, plan, upto=max(wanted))
    else:
        builder = run_single_batch if technique == SINGLE_BATCH else run_last_batch

        def models():
            for i in wanted:
                try:
                    yield i, builder(protocol, i, plan), None
                except NoCompleteTraces:
                    yield i, None, None

        models = models()
    for i, M, stats in models:
        if stats is not None:
            run.stats[i] = stats
        if i not in wanted:
            continue
        if M is None:
            run.skipped[i] = "no complete traces"
            continue
        run.versions[i] = M.version
        reports = evaluate_model(M, protocol, i, plan, run.technique)
        if reports:
            run.reports[i] = reports
        else:
            run.skipped[i] = "no complete traces start in the next window"
    return run


def load_events(plan: ExperimentPlan) -> list[Event]:
    if plan.log_path is None:
        raise PlanError("plan has no input log")
    schema, delim = (DEFAULT_SCHEMA, ",") if plan.schema_path is None else load_schema(plan.schema_path)
    return read_log(plan.log_path, schema, delim)


def run_experiment(plan: ExperimentPlan, events: Sequence[Event] | None = None) -> list[TechniqueRun]:
    events = load_events(plan) if events is None else events
    protocol = Protocol.from_events(events, plan.k, plan.policy)
    return [run_technique(protocol, plan, t) for t in plan.techniques]


def sweep_grace(plan: ExperimentPlan, events: Sequence[Event] | None = None) -> list[TechniqueRun]:
    """One online run per grace period."""
    events = load_events(plan) if events is None else events
    protocol = Protocol.from_events(events, plan.k, plan.policy)
    return [
        run_technique(protocol, plan.with_grace(g), ONLINE, label=f"online[grace={g}]") for g in plan.grace_periods
    ]


def best_grace(runs: Sequence[TechniqueRun], metric: str = "ctd") -> str:
    """Label of the run with the lowest mean ``metric``."""

    def score(run):
        vals = [getattr(r, metric) for r in run.all_reports() if getattr(r, metric) is not None]
        return sum(vals) / len(vals) if vals else float("inf")

    return min(runs, key=score).technique
