"""Synthetic loan-application log with a sudden drift.

Before the drift half of the applications go to an automated review that
takes 30 minutes and the rest to a 50-minute manual review. After it, 80% are
reviewed automatically in 10 minutes and a loan offer is made before the
applicant is notified.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .stream import WEEK, Event

REQUEST = "request"
AUTOMATED = "automated review"
MANUAL = "manual review"
LOAN_OFFER = "loan offer"
NOTIFY = "notify"

# Monday 2024-01-01 00:00 UTC
DEFAULT_START = 1_704_067_200

CLERKS = [f"clerk-{i}" for i in range(1, 5)]
POOLS = {
    REQUEST: CLERKS,
    AUTOMATED: [f"bot-{i}" for i in range(1, 5)],
    MANUAL: [f"reviewer-{i}" for i in range(1, 7)],
    LOAN_OFFER: CLERKS,
    NOTIFY: CLERKS,
}


@dataclass(frozen=True)
class Phase:
    automated_share: float
    minutes: dict  # activity -> mean minutes
    loan_offer: bool

    def to_dict(self) -> dict:
        return {"automated_share": self.automated_share, "minutes": dict(self.minutes), "loan_offer": self.loan_offer}


PRE = Phase(0.5, {REQUEST: 5.0, AUTOMATED: 30.0, MANUAL: 50.0, NOTIFY: 5.0}, False)
POST = Phase(0.8, {REQUEST: 5.0, AUTOMATED: 10.0, MANUAL: 50.0, LOAN_OFFER: 15.0, NOTIFY: 5.0}, True)
DURATION_CV = 0.1


def generate_drift_scenario(
    seed: int = 0,
    n_pre: int = 5000,
    n_post: int = 5000,
    *,
    start: int = DEFAULT_START,
    weeks: float = 20.0,
    pre: Phase = PRE,
    post: Phase = POST,
) -> tuple[list[Event], dict]:
    """Return ``(events, manifest)``.

    Cases arrive as a Poisson process spread over about ``weeks`` weeks; the
    first ``n_pre`` follow ``pre``. Each activity goes to the least busy
    resource of its pool, so resources never overlap.
    """
    if n_pre < 100 or n_post < 100:
        raise ValueError("n_pre and n_post must be at least 100")
    rng = random.Random(seed)
    n = n_pre + n_post
    mean_gap = weeks * WEEK / n
    busy: dict[str, int] = {}
    events: list[Event] = []
    counts = {"pre": {"automated": 0, "cases": 0}, "post": {"automated": 0, "cases": 0}}
    t = float(start)
    drift_time = None
    for k in range(n):
        t += rng.expovariate(1.0 / mean_gap)
        phase_name = "pre" if k < n_pre else "post"
        phase = pre if k < n_pre else post
        if k == n_pre:
            drift_time = int(t)
        review = AUTOMATED if rng.random() < phase.automated_share else MANUAL
        counts[phase_name]["cases"] += 1
        counts[phase_name]["automated"] += review == AUTOMATED
        path = [REQUEST, review] + ([LOAN_OFFER] if phase.loan_offer else []) + [NOTIFY]
        ready = int(t)
        case_id = f"case-{k + 1:05d}"
        for activity in path:
            pool = POOLS[activity]
            res = min(pool, key=lambda r: (busy.get(r, 0), rng.random()))
            begin = max(ready, busy.get(res, 0))
            mean = phase.minutes[activity] * 60
            dur = max(60, int(round(rng.gauss(mean, DURATION_CV * mean))))
            end = begin + dur
            busy[res] = end
            events.append(Event(case_id, activity, end, res, {}, begin))
            ready = end
    events.sort(key=lambda e: (e.timestamp, e.case_id))
    manifest = {
        "seed": seed,
        "n_pre": n_pre,
        "n_post": n_post,
        "start": start,
        "drift_time": drift_time,
        "mean_interarrival_s": mean_gap,
        "duration_cv": DURATION_CV,
        "phases": {"pre": pre.to_dict(), "post": post.to_dict()},
        "empirical": {
            name: {"cases": c["cases"], "automated_share": c["automated"] / c["cases"]} for name, c in counts.items()
        },
    }
    return events, manifest
