"""Distances between a real and a simulated event log.

Temporal distances are earth mover's distances between normalised
histograms: hourly bins on the time axis (AED, RED, CAR) and the 168
hour-of-week slots on a circle (CED, CWD). They are reported in hours; CTD is
reported in minutes.
"""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse import csr_matrix

from . import kernels
from .descriptive import SLOTS, hour_of_week
from .errors import EmptyLog, EmptySample, NoSharedResources
from .stream import HOUR, Event, group_cases

METRICS = ("cfld", "three_gram", "aed", "red", "ced", "cwd", "car", "ctd")
HUNGARIAN_LIMIT = 500
LP_VARIANT_LIMIT = 250_000

Log = Sequence[Event]


# --------------------------------------------------------------------------
# one-dimensional transport


def wasserstein_1d(a: Iterable[float], b: Iterable[float]) -> float:
    """Exact W1 between two empirical samples."""
    a = np.sort(np.asarray(list(a), dtype=np.float64))
    b = np.sort(np.asarray(list(b), dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise EmptySample("wasserstein_1d needs two nonempty samples")
    return float(kernels.w1_sorted(a, b))


@dataclass(frozen=True)
class BinnedSeries:
    """Masses on consecutive bins of constant width starting at ``origin``."""

    origin: int
    masses: tuple
    width: float = 1.0

    def __post_init__(self):
        if any(m < 0 or not math.isfinite(m) for m in self.masses):
            raise ValueError("masses must be finite and nonnegative")
        if not sum(self.masses) > 0:
            raise EmptySample("series has no mass")

    @classmethod
    def from_counts(cls, counts: dict) -> "BinnedSeries":
        lo, hi = min(counts), max(counts)
        return cls(lo, tuple(float(counts.get(i, 0)) for i in range(lo, hi + 1)))


def binned_emd(p: BinnedSeries, q: BinnedSeries) -> float:
    """EMD between two series after normalising each to unit mass."""
    lo = min(p.origin, q.origin)
    hi = max(p.origin + len(p.masses), q.origin + len(q.masses))
    x = np.zeros(hi - lo)
    y = np.zeros(hi - lo)
    x[p.origin - lo : p.origin - lo + len(p.masses)] = p.masses
    y[q.origin - lo : q.origin - lo + len(q.masses)] = q.masses
    diff = np.cumsum(x / x.sum() - y / y.sum())
    return float(np.abs(diff[:-1]).sum() * p.width)


def circular_emd(p: Sequence[float], q: Sequence[float]) -> float:
    """EMD on a circle of unit-spaced bins (both histograms normalised)."""
    x = np.asarray(p, dtype=np.float64)
    y = np.asarray(q, dtype=np.float64)
    if x.shape != y.shape or x.sum() <= 0 or y.sum() <= 0:
        raise EmptySample("circular_emd needs two nonempty histograms of equal length")
    c = np.cumsum(x / x.sum() - y / y.sum())
    return float(np.abs(c - np.median(c)).sum())


# --------------------------------------------------------------------------
# control flow


def _traces(log: Log) -> list[tuple[str, ...]]:
    return [tuple(e.activity for e in sorted(evs, key=lambda e: (e.start_ts, e.timestamp))) for evs in group_cases(log).values()]


def _nonempty(log: Log, name: str):
    if not log:
        raise EmptyLog(f"{name} log is empty")


@dataclass
class MatchResult:
    value: float
    exact: bool


def _match_cost(real: list, sim: list) -> MatchResult:
    vr, vs = Counter(real), Counter(sim)
    n = max(len(real), len(sim))
    # the shorter log is padded with empty traces
    if len(real) < n:
        vr[()] += n - len(real)
    if len(sim) < n:
        vs[()] += n - len(sim)
    rk, sk = sorted(vr), sorted(vs)
    codes: dict = {}
    enc = lambda t: [codes.setdefault(a, len(codes)) for a in t]  # noqa: E731
    cost = kernels.distance_matrix([enc(t) for t in rk], [enc(t) for t in sk])
    if n <= HUNGARIAN_LIMIT:
        rows = np.repeat(np.arange(len(rk)), [vr[t] for t in rk])
        cols = np.repeat(np.arange(len(sk)), [vs[t] for t in sk])
        full = cost[np.ix_(rows, cols)]
        i, j = linear_sum_assignment(full)
        return MatchResult(float(full[i, j].sum() / n), True)
    if len(rk) * len(sk) <= LP_VARIANT_LIMIT:
        return MatchResult(_transport(cost, [vr[t] for t in rk], [vs[t] for t in sk]) / n, True)
    return MatchResult(_greedy(cost, [vr[t] for t in rk], [vs[t] for t in sk]) / n, False)


def _transport(cost: np.ndarray, supply, demand) -> float:
    """Balanced transportation problem; integral supplies give an exact matching value."""
    r, c = cost.shape
    a_eq = []
    for i in range(r):
        row = np.zeros(r * c)
        row[i * c : (i + 1) * c] = 1
        a_eq.append(row)
    for j in range(c):
        col = np.zeros(r * c)
        col[j::c] = 1
        a_eq.append(col)
    res = linprog(cost.ravel(), A_eq=csr_matrix(np.array(a_eq)), b_eq=np.concatenate([supply, demand]), bounds=(0, None), method="highs")
    if not res.success:  # pragma: no cover - balanced problems are always feasible
        return _greedy(cost, supply, demand)
    return float(res.fun)


def _greedy(cost: np.ndarray, supply, demand) -> float:
    supply, demand = list(supply), list(demand)
    total = 0.0
    for flat in np.argsort(cost, axis=None, kind="stable"):
        i, j = divmod(int(flat), cost.shape[1])
        f = min(supply[i], demand[j])
        if f:
            total += f * cost[i, j]
            supply[i] -= f
            demand[j] -= f
    return total


def cfld(real: Log, sim: Log) -> float:
    """Mean normalised edit distance under an optimal one-to-one trace matching."""
    return cfld_detail(real, sim).value


def cfld_detail(real: Log, sim: Log) -> MatchResult:
    _nonempty(real, "real")
    _nonempty(sim, "simulated")
    return _match_cost(_traces(real), _traces(sim))


def _grams(traces) -> Counter:
    g = Counter()
    for t in traces:
        padded = ("\x02", "\x02") + tuple(t) + ("\x03", "\x03")
        for i in range(len(padded) - 2):
            g[padded[i : i + 3]] += 1
    return g


def three_gram_distance(real: Log, sim: Log) -> float:
    _nonempty(real, "real")
    _nonempty(sim, "simulated")
    f1, f2 = _grams(_traces(real)), _grams(_traces(sim))
    num = sum(abs(f1[g] - f2[g]) for g in f1.keys() | f2.keys())
    return num / (sum(f1.values()) + sum(f2.values()))


# --------------------------------------------------------------------------
# time


def _hour_bins(stamps) -> BinnedSeries:
    return BinnedSeries.from_counts(Counter(int(s) // HOUR for s in stamps))


def _case_starts(log: Log) -> dict:
    return {c: min(e.start_ts for e in evs) for c, evs in group_cases(log).items()}


def _week_histogram(stamps) -> np.ndarray:
    h = np.zeros(SLOTS)
    for s in stamps:
        h[hour_of_week(int(s))] += 1
    return h


def _workload(events) -> np.ndarray:
    """Hour-of-week mass of the time a resource spends on its events."""
    h = np.zeros(SLOTS)
    for e in events:
        start, end = e.start_ts, e.timestamp
        if end <= start:
            h[hour_of_week(start)] += 1.0
            continue
        t = start
        while t < end:
            nxt = min(end, (t // HOUR + 1) * HOUR)
            h[hour_of_week(t)] += (nxt - t) / HOUR
            t = nxt
    return h


def aed(real: Log, sim: Log) -> float:
    _nonempty(real, "real")
    _nonempty(sim, "simulated")
    return binned_emd(_hour_bins(e.timestamp for e in real), _hour_bins(e.timestamp for e in sim))


def red(real: Log, sim: Log) -> float:
    _nonempty(real, "real")
    _nonempty(sim, "simulated")

    def rel(log):
        starts = _case_starts(log)
        return _hour_bins(e.timestamp - starts[e.case_id] for e in log)

    return binned_emd(rel(real), rel(sim))


def ced(real: Log, sim: Log) -> float:
    _nonempty(real, "real")
    _nonempty(sim, "simulated")
    return circular_emd(_week_histogram(e.timestamp for e in real), _week_histogram(e.timestamp for e in sim))


def cwd_detail(real: Log, sim: Log) -> tuple[float, int, int]:
    """(mean distance over shared resources, shared count, unshared count)."""
    _nonempty(real, "real")
    _nonempty(sim, "simulated")
    by_r: dict = {}
    by_s: dict = {}
    for e in real:
        if e.resource:
            by_r.setdefault(e.resource, []).append(e)
    for e in sim:
        if e.resource:
            by_s.setdefault(e.resource, []).append(e)
    shared = sorted(by_r.keys() & by_s.keys())
    if not shared:
        raise NoSharedResources("the logs share no resource")
    d = [circular_emd(_workload(by_r[r]), _workload(by_s[r])) for r in shared]
    return float(np.mean(d)), len(shared), len(by_r.keys() ^ by_s.keys())


def cwd(real: Log, sim: Log) -> float:
    return cwd_detail(real, sim)[0]


def car(real: Log, sim: Log) -> float:
    _nonempty(real, "real")
    _nonempty(sim, "simulated")
    return binned_emd(_hour_bins(_case_starts(real).values()), _hour_bins(_case_starts(sim).values()))


def cycle_times(log: Log) -> list[float]:
    return [max(e.timestamp for e in evs) - min(e.start_ts for e in evs) for evs in group_cases(log).values()]


def ctd(real: Log, sim: Log) -> float:
    """W1 between per-case cycle times, in minutes."""
    _nonempty(real, "real")
    _nonempty(sim, "simulated")
    return wasserstein_1d(cycle_times(real), cycle_times(sim)) / 60.0


TEMPORAL = {"aed": aed, "red": red, "ced": ced, "cwd": cwd, "car": car}


def temporal_distance(kind: str, real: Log, sim: Log) -> float:
    try:
        return TEMPORAL[kind.lower()](real, sim)
    except KeyError:
        raise ValueError(f"unknown temporal distance {kind!r}") from None


# --------------------------------------------------------------------------
# reports


@dataclass
class DistanceReport:
    cfld: float | None = None
    three_gram: float | None = None
    aed: float | None = None
    red: float | None = None
    ced: float | None = None
    cwd: float | None = None
    car: float | None = None
    ctd: float | None = None
    window: int | None = None
    technique: str = ""
    replication: int = 0
    missing: dict = field(default_factory=dict)  # metric -> reason
    approximate: bool = False

    def values(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}

    def rows(self):
        for m in METRICS:
            yield (self.window, self.technique, self.replication, m, getattr(self, m))


_FUNCS = {
    "three_gram": three_gram_distance,
    "aed": aed,
    "red": red,
    "ced": ced,
    "cwd": cwd,
    "car": car,
    "ctd": ctd,
}


def evaluate_pair(real: Log, sim: Log, *, window=None, technique: str = "", replication: int = 0) -> DistanceReport:
    """All eight distances; failures are recorded in ``missing`` instead of raised."""
    rep = DistanceReport(window=window, technique=technique, replication=replication)
    try:
        res = cfld_detail(real, sim)
        rep.cfld, rep.approximate = res.value, not res.exact
    except (EmptyLog, EmptySample) as exc:
        rep.missing["cfld"] = type(exc).__name__
    for name, f in _FUNCS.items():
        try:
            setattr(rep, name, f(real, sim))
        except (EmptyLog, EmptySample, NoSharedResources) as exc:
            rep.missing[name] = type(exc).__name__
    return rep


def mean_std(reports: Sequence[DistanceReport]) -> dict:
    """Per metric (mean, sample std) over replications; None when every value is missing."""
    out = {}
    for m in METRICS:
        vals = [getattr(r, m) for r in reports if getattr(r, m) is not None]
        if not vals:
            out[m] = None
        else:
            out[m] = (float(np.mean(vals)), float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0)
    return out


def write_report_csv(reports: Iterable[DistanceReport], target) -> None:
    own = isinstance(target, str) or hasattr(target, "__fspath__")
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window", "technique", "replication", "metric", "value"])
        for rep in reports:
            for window, tech, k, m, v in rep.rows():
                w.writerow([window, tech, k, m, "" if v is None else repr(round(v, 12))])
    finally:
        if own:
            fh.close()

