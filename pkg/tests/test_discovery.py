import random

import pytest
from hypothesis import given, settings, strategies as st

from _gen import random_tree
from streamsim.alignment import replays
from streamsim.discovery import DirectlyFollowsGraph, discover_initial_tree
from streamsim.errors import EmptyInput
from streamsim.tree import language_sample


def test_sequence():
    assert str(discover_initial_tree([("a", "b")] * 10)) == "→(a, b)"


def test_xor():
    assert str(discover_initial_tree([("a",)] * 5 + [("b",)] * 5)) == "×(a, b)"


def test_loan_log():
    traces = [("request", "manual review", "notify"), ("request", "automated review", "notify")] * 5
    tree = discover_initial_tree(traces)
    assert tree.root.kind == "seq"
    first, mid, last = tree.root.children
    assert (first.label, last.label) == ("request", "notify")
    assert mid.kind == "xor" and {c.label for c in mid.children} == {"manual review", "automated review"}


def test_parallel_and_loop():
    assert str(discover_initial_tree([("a", "b"), ("b", "a")] * 5)) == "∧(a, b)"
    tree = discover_initial_tree([("a",), ("a", "b", "a"), ("a", "b", "a", "b", "a")])
    assert tree.root.kind == "loop"


def test_empty_input():
    with pytest.raises(EmptyInput):
        discover_initial_tree([])


def test_infrequent_skip_filtered():
    traces = [("a", "b", "c")] * 50 + [("a", "c")]
    assert str(discover_initial_tree(traces, 0.2)) == "→(a, b, c)"
    assert str(discover_initial_tree(traces, 0.0)) == "→(a, ×(τ, b), c)"


def test_dfg_counts():
    g = DirectlyFollowsGraph.from_log({("a", "b"): 3, ("a",): 1})
    assert g.edges[("a", "b")] == 3


@settings(max_examples=40)
@given(st.integers(0, 1_000_000))
def test_fitness_without_noise_filter(seed):
    src = random_tree(random.Random(seed))
    traces = language_sample(src, 40, seed, max_loops=3)
    found = discover_initial_tree(traces, 0.0)
    assert all(replays(found, t) for t in traces)
