from dataclasses import replace

import pytest

from streamsim.alignment import replays
from streamsim.errors import NoCompleteTraces, PlanError
from streamsim.pipeline import (
    GRACE_PERIODS,
    ONLINE,
    SINGLE_BATCH,
    ExperimentPlan,
    Protocol,
    advance,
    best_grace,
    load_plan,
    online_models,
    run_experiment,
    run_last_batch,
    run_single_batch,
    run_technique,
    sweep_grace,
)
from streamsim.scenario import AUTOMATED, LOAN_OFFER, generate_drift_scenario
from streamsim.stream import WEEK, CaseLedger, StreamWindow, shift_event
from streamsim.tree import decision_points, language_sample


@pytest.fixture(scope="module")
def small():
    events, man = generate_drift_scenario(seed=2, n_pre=300, n_post=300, weeks=4)
    plan = ExperimentPlan(k=4, replications=2, end_activities=("notify",), grace_period=50)
    return events, man, plan, Protocol.from_events(events, plan.k, plan.policy)


def test_plan_validation():
    with pytest.raises(PlanError):
        ExperimentPlan(k=1)
    with pytest.raises(PlanError):
        ExperimentPlan(techniques=("magic",))
    with pytest.raises(PlanError):
        ExperimentPlan(techniques=())
    with pytest.raises(PlanError):
        ExperimentPlan(replications=0)


def test_load_plan(tmp_path):
    (tmp_path / "data").mkdir()
    plan_file = tmp_path / "plan.toml"
    plan_file.write_text(
        '[input]\npath = "data/log.csv"\n'
        '[experiment]\nk = 5\ntechniques = ["online"]\nreplications = 3\nseed = 7\n'
        '[completion]\nend_activities = ["notify"]\ntimeout_days = 2\n'
        '[output]\ndir = "out"\n'
    )
    plan = load_plan(plan_file)
    assert plan.log_path == str(tmp_path / "data" / "log.csv")
    assert (plan.k, plan.techniques, plan.replications, plan.seed) == (5, ("online",), 3, 7)
    assert plan.policy.timeout == 2 * 86400 and plan.policy.end_activities == {"notify"}
    assert plan.output_dir == str(tmp_path / "out")


@pytest.mark.parametrize("body", ['[experiment]\nk = 3\n', '[input]\npath = "x"\n[experiment]\ncolour = 1\n', "not toml ["])
def test_bad_plans(tmp_path, body):
    p = tmp_path / "plan.toml"
    p.write_text(body)
    with pytest.raises(PlanError):
        load_plan(p)


def test_windows_tile_the_log(small):
    events, _, plan, pr = small
    assert pr.k == 4
    assert sum(len(w) for w in pr.windows) == len(events)
    assert all(a.end == b.start for a, b in zip(pr.windows, pr.windows[1:]))
    assert all((w.end - w.start) % WEEK == 0 for w in pr.windows)


def test_test_set_holds_cases_starting_next_window(small):
    _, _, _, pr = small
    w = pr.windows[2]
    test = pr.test_set(2)
    firsts = {}
    for e in test:
        firsts[e.case_id] = min(firsts.get(e.case_id, e.start_ts), e.start_ts)
    assert firsts and all(w.start <= t <= w.end for t in firsts.values())


def test_no_leakage(small):
    _, _, plan, pr = small
    for i in (1, 2):
        pr.reads.clear()
        run_technique(pr, replace(plan, evaluate_windows=(i,), replications=1), ONLINE)
        assert max(pr.reads) <= i + 1


def test_single_batch_at_one_equals_online_start(small):
    _, _, plan, pr = small
    (_, first, _), = [m for m in online_models(pr, plan, upto=1)]
    batch = run_single_batch(pr, 1, plan)
    assert first.tree == batch.tree
    assert first.predictive.to_dict() == batch.predictive.to_dict()


def test_advance_on_empty_window(small):
    _, _, plan, pr = small
    M = run_single_batch(pr, 1, plan)
    M2, ledger, stats = advance(M, StreamWindow(10, 20, ()), plan.policy, plan.params)
    assert M2.tree is M.tree and M2.predictive is M.predictive
    assert M2.version == (20, M.version[1] + 1) and stats.fragments == 0


def test_online_lineage_grows_and_learns_drift(small):
    _, man, plan, pr = small
    models = [(i, M) for i, M, _ in online_models(pr, plan)]
    for (_, a), (_, b) in zip(models, models[1:]):
        for trace in language_sample(a.tree, 200, 1, max_loops=3):
            assert replays(b.tree, trace)
    last = models[-1][1]
    assert LOAN_OFFER in last.tree.alphabet and LOAN_OFFER in last.predictive.duration_models


def test_two_steps_versus_one(small):
    _, _, plan, pr = small
    M = run_single_batch(pr, 1, plan)
    ledger = pr.ledgers[1]
    a, la, _ = advance(M, pr.windows[1], plan.policy, plan.params, ledger=ledger)
    a, _, _ = advance(a, pr.windows[2], plan.policy, plan.params, ledger=la)
    joined = StreamWindow(pr.windows[1].start, pr.windows[2].end, pr.windows[1].events + pr.windows[2].events)
    b, _, _ = advance(M, joined, plan.policy, plan.params, ledger=ledger)
    for trace in language_sample(M.tree, 200, 2, max_loops=3):
        assert replays(a.tree, trace) and replays(b.tree, trace)


def test_batch_needs_complete_traces(small):
    _, _, plan, _ = small
    empty = Protocol([StreamWindow(0, WEEK, ()), StreamWindow(WEEK, 2 * WEEK, ())], [CaseLedger()] * 3, plan.policy)
    with pytest.raises(NoCompleteTraces):
        run_last_batch(empty, 1, plan)


def test_minimal_plan_single_cell(small):
    events, _, plan, _ = small
    runs = run_experiment(replace(plan, k=2, techniques=(SINGLE_BATCH,)), events)
    (run,) = runs
    assert list(run.reports) == [1] and len(run.reports[1]) == plan.replications


def test_skip_marker_for_empty_window(small):
    events, _, plan, _ = small
    lo = min(e.start_ts for e in events)
    # push the second half of the log two weeks later: W_2 of k=3 is empty
    late = [e for e in events if e.timestamp >= lo + 2 * WEEK]
    early = [e for e in events if e.timestamp < lo + 2 * WEEK and e.case_id not in {x.case_id for x in late}]
    moved = early + [shift_event(e, 2 * WEEK) for e in late]
    pr = Protocol.from_events(moved, 3, plan.policy)
    assert len(pr.windows[1]) == 0
    run = run_technique(pr, replace(plan, replications=1), ONLINE)
    assert 1 in run.skipped and 2 in run.reports


def test_sweep_labels(small):
    events, _, plan, _ = small
    runs = sweep_grace(replace(plan, replications=1, evaluate_windows=(3,)), events)
    assert [r.technique for r in runs] == [f"online[grace={g}]" for g in GRACE_PERIODS]
    assert best_grace(runs) in {r.technique for r in runs}


def test_single_batch_blends_phases(small):
    events, man, plan, pr = small
    B = run_single_batch(pr, pr.k, plan)
    (xid, labels), = [(n, l) for n, l in decision_points(B.tree) if AUTOMATED in l]
    leaves = B.predictive.branching_models[xid].leaves()
    total = sum(sum(l.counts.values()) for l in leaves)
    auto = sum(l.counts.get(labels.index(AUTOMATED), 0) for l in leaves)
    pre, post = man["empirical"]["pre"], man["empirical"]["post"]
    assert 0.5 - 0.1 < auto / total < 0.8 + 0.1
    assert min(pre["automated_share"], post["automated_share"]) - 0.05 <= auto / total <= max(pre["automated_share"], post["automated_share"]) + 0.05
