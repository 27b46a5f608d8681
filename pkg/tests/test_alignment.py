import itertools
import random

import pytest
from hypothesis import given, strategies as st

from _gen import random_node
from streamsim.alignment import align, fitness_cost, replays
from streamsim.errors import StateSpaceBudgetExceeded
from streamsim.stream import COMPLETE, INFIX, POSTFIX, PREFIX
from streamsim.tree import ProcessTree


def shuffles(a, b):
    if not a:
        return {b}
    if not b:
        return {a}
    return {(a[0],) + s for s in shuffles(a[1:], b)} | {(b[0],) + s for s in shuffles(a, b[1:])}


def language(node):
    """Full language of a loop-free tree, by enumeration."""
    if node.kind == "act":
        return {(node.label,)}
    if node.kind == "tau":
        return {()}
    parts = [language(c) for c in node.children]
    if node.kind == "xor":
        return set().union(*parts)
    out = {()}
    for p in parts:
        if node.kind == "seq":
            out = {x + y for x in out for y in p}
        else:
            out = {s for x in out for y in p for s in shuffles(x, y)}
    return out


def lcs(a, b):
    dp = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            dp[i + 1][j + 1] = dp[i][j] + 1 if x == y else max(dp[i][j + 1], dp[i + 1][j])
    return dp[-1][-1]


def oracle_cost(lang, trace, kind):
    """Insert/delete edit cost to the closest language member, with the
    fragment kind allowing free trimming of the model trace's ends."""
    best = None
    for m in lang:
        cands = [m]
        if kind in (PREFIX, INFIX):
            cands = [c[:j] for c in cands for j in range(len(c) + 1)]
        if kind in (POSTFIX, INFIX):
            cands = [c[j:] for c in cands for j in range(len(c) + 1)]
        for c in cands:
            cost = len(c) + len(trace) - 2 * lcs(c, trace)
            best = cost if best is None else min(best, cost)
    return best


def test_perfect_fit():
    t = ProcessTree.parse("→(a, b)")
    assert fitness_cost(t, ["a", "b"]) == 0


def test_prefix_open_end():
    t = ProcessTree.parse("→(a, b)")
    al = align(t, ["a"], PREFIX)
    assert al.cost == 0 and al.open_end
    assert align(t, ["a"], COMPLETE).cost == 1


def test_one_log_move():
    al = align(ProcessTree.parse("→(a, b)"), ["a", "c", "b"])
    assert al.cost == 1
    assert [(m.kind, m.activity) for m in al.moves if m.kind != "model"] == [("sync", "a"), ("log", "c"), ("sync", "b")]
    # exhaustive: every other edit script of the trace against ⟨a,b⟩ costs more
    assert oracle_cost({("a", "b")}, ("a", "c", "b"), COMPLETE) == 1


def test_postfix_skips_earlier_model_moves():
    t = ProcessTree.parse("→(a, b, c)")
    assert align(t, ["c"], POSTFIX).cost == 0
    assert align(t, ["b"], INFIX).cost == 0
    assert align(t, ["c"], PREFIX).cost == 1  # one log move beats two model moves


def test_log_projection(loan_tree):
    al = align(loan_tree, ["request", "x", "notify"])
    assert al.log_projection == ("request", "x", "notify")


@given(st.integers(0, 100_000), st.lists(st.sampled_from("abcdx"), max_size=5), st.sampled_from((COMPLETE, PREFIX, POSTFIX, INFIX)))
def test_cost_matches_enumeration_oracle(seed, trace, kind):
    rng = random.Random(seed)
    labels = list("abcd")
    rng.shuffle(labels)
    node = random_node(rng, labels, 0, 3)
    while any(n.kind == "loop" for n in node.walk()):
        labels = list("abcd")
        node = random_node(rng, labels, 0, 3)
    tree = ProcessTree.build(node)
    lang = language(tree.root)
    assert align(tree, trace, kind).cost == oracle_cost(lang, tuple(trace), kind)
    assert replays(tree, trace, kind) == (oracle_cost(lang, tuple(trace), kind) == 0)


def test_loop_replay():
    t = ProcessTree.parse("⟲(a, b)")
    for n in range(4):
        trace = ["a"] + ["b", "a"] * n
        assert replays(t, trace)
    assert not replays(t, ["a", "b"])


def test_budget():
    t = ProcessTree.parse("∧(a, b, c, d, e, f)")
    with pytest.raises(StateSpaceBudgetExceeded):
        align(t, list("zzzzzzzzzz"), budget=5)
