"""Alignments of trace fragments against process trees.

The tree is compiled to a safe workflow net (markings are place bitmasks) and
an optimal alignment is a shortest path over the synchronous product of that
net and the fragment. Costs: log move 1, visible model move 1, silent model
move 0, synchronous move 0. Fragment kinds relax the endpoints: prefixes may
stop in any marking, postfixes may start in any reachable marking (model moves
before the first consumed event are free), infixes get both.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import StateSpaceBudgetExceeded
from .stream import COMPLETE, INFIX, POSTFIX, PREFIX, TraceFragment
from .tree import ACT, AND, LOOP, SEQ, TAU, XOR, ProcessTree

DEFAULT_BUDGET = 200_000


@dataclass(frozen=True)
class Transition:
    index: int
    label: str | None  # visible activity, None when silent
    node_id: int
    role: str  # act | tau | choose | split | join | enter | exit | redo
    choice: int | None
    pre: int
    post: int

    @property
    def silent(self) -> bool:
        return self.label is None


@dataclass(frozen=True)
class Net:
    transitions: tuple[Transition, ...]
    initial: int
    final: int
    n_places: int
    by_label: dict

    def enabled(self, marking: int):
        for t in self.transitions:
            if marking & t.pre == t.pre:
                yield t

    @staticmethod
    def fire(marking: int, t: Transition) -> int:
        return (marking & ~t.pre) | t.post


def compile_net(tree: ProcessTree) -> Net:
    transitions: list[Transition] = []
    places = [0]

    def new_place() -> int:
        places[0] += 1
        return 1 << (places[0] - 1)

    def add(label, node_id, role, choice, pre, post):
        transitions.append(Transition(len(transitions), label, node_id, role, choice, pre, post))

    def build(node, p_in, p_out):
        k = node.kind
        if k == ACT:
            add(node.label, node.id, "act", None, p_in, p_out)
        elif k == TAU:
            add(None, node.id, "tau", None, p_in, p_out)
        elif k == SEQ:
            cur = p_in
            for i, c in enumerate(node.children):
                nxt = p_out if i == len(node.children) - 1 else new_place()
                build(c, cur, nxt)
                cur = nxt
        elif k == XOR:
            for i, c in enumerate(node.children):
                q = new_place()
                add(None, node.id, "choose", i, p_in, q)
                build(c, q, p_out)
        elif k == AND:
            ins, outs = 0, 0
            for c in node.children:
                q, r = new_place(), new_place()
                build(c, q, r)
                ins |= q
                outs |= r
            add(None, node.id, "split", None, p_in, ins)
            add(None, node.id, "join", None, outs, p_out)
        elif k == LOOP:
            q, r, s = new_place(), new_place(), new_place()
            add(None, node.id, "enter", None, p_in, q)
            build(node.children[0], q, r)
            add(None, node.id, "exit", 0, r, p_out)
            add(None, node.id, "redo", 1, r, s)
            build(node.children[1], s, q)
        else:
            raise ValueError(f"unknown node kind {k}")

    source, sink = new_place(), new_place()
    build(tree.root, source, sink)
    by_label: dict[str, list[Transition]] = {}
    for t in transitions:
        if t.label is not None:
            by_label.setdefault(t.label, []).append(t)
    return Net(tuple(transitions), source, sink, places[0], by_label)


class Move(NamedTuple):
    kind: str  # sync | log | model
    activity: str | None
    transition: Transition | None


@dataclass(frozen=True)
class Alignment:
    moves: tuple[Move, ...]
    cost: int
    open_start: bool = False
    open_end: bool = False

    @property
    def log_projection(self) -> tuple[str, ...]:
        return tuple(m.activity for m in self.moves if m.kind in ("sync", "log"))

    def deviations(self) -> list[int]:
        """Indices of costly moves: log moves and visible model moves."""
        out = []
        started = False
        for i, m in enumerate(self.moves):
            if m.kind == "log":
                out.append(i)
            elif m.kind == "model" and m.transition.label is not None:
                if started or not self.open_start:
                    out.append(i)
            if m.kind in ("sync", "log"):
                started = True
        return out


def _flags(kind: str) -> tuple[bool, bool]:
    return kind in (POSTFIX, INFIX), kind in (PREFIX, INFIX)


def align(tree: ProcessTree, fragment, kind: str = COMPLETE, *, budget: int = DEFAULT_BUDGET) -> Alignment:
    """Optimal alignment of ``fragment`` (a TraceFragment or activity sequence)."""
    if isinstance(fragment, TraceFragment):
        trace, kind = fragment.activities, fragment.kind
    else:
        trace = tuple(fragment)
    open_start, open_end = _flags(kind)
    net = tree.net
    n = len(trace)
    transitions = net.transitions
    fire = Net.fire

    start = (net.initial, 0)
    best = {start: 0}
    parent: dict = {start: None}
    heap = [(0, 0, net.initial, 0)]
    counter = 1
    popped = 0
    while heap:
        cost, _, m, i = heapq.heappop(heap)
        if best.get((m, i), cost + 1) < cost:
            continue
        if i == n and (open_end or m == net.final):
            return Alignment(_unwind(parent, (m, i)), cost, open_start, open_end)
        popped += 1
        if popped > budget:
            raise StateSpaceBudgetExceeded(f"more than {budget} states for trace of length {n}")
        succ = []
        if i < n:
            succ.append((cost + 1, m, i + 1, Move("log", trace[i], None)))
        free_visible = open_start and i == 0
        for t in transitions:
            if m & t.pre != t.pre:
                continue
            m2 = fire(m, t)
            if t.label is None:
                succ.append((cost, m2, i, Move("model", None, t)))
            else:
                if i < n and t.label == trace[i]:
                    succ.append((cost, m2, i + 1, Move("sync", t.label, t)))
                succ.append((cost if free_visible else cost + 1, m2, i, Move("model", t.label, t)))
        for c2, m2, i2, move in succ:
            key = (m2, i2)
            if c2 < best.get(key, c2 + 1):
                best[key] = c2
                parent[key] = ((m, i), move)
                heapq.heappush(heap, (c2, counter, m2, i2))
                counter += 1
    raise StateSpaceBudgetExceeded("no alignment found")  # unreachable for sound trees


def _unwind(parent, key) -> tuple[Move, ...]:
    moves = []
    while parent[key] is not None:
        key, move = parent[key]
        moves.append(move)
    moves.reverse()
    return tuple(moves)


def _closure(net: Net, markings, silent_only: bool, budget: int) -> frozenset:
    """Markings reachable from ``markings`` by silent transitions (or by any
    transition when ``silent_only`` is false)."""
    seen = set(markings)
    stack = list(seen)
    while stack:
        m = stack.pop()
        for t in net.transitions:
            if (silent_only and t.label is not None) or m & t.pre != t.pre:
                continue
            m2 = (m & ~t.pre) | t.post
            if m2 not in seen:
                seen.add(m2)
                stack.append(m2)
                if len(seen) > budget:
                    raise StateSpaceBudgetExceeded(f"more than {budget} markings in a closure")
    return frozenset(seen)


def replays(tree: ProcessTree, trace: Sequence[str], kind: str = COMPLETE, *, budget: int = DEFAULT_BUDGET) -> bool:
    """True iff ``trace`` aligns with cost 0 under ``kind`` semantics.

    Tracks the set of markings consistent with each prefix; sets are cached
    per prefix, so replaying many traces that share prefixes stays cheap.
    """
    trace = tuple(trace)
    net = tree.net
    cache = net.__dict__.setdefault("_replay_cache", {})
    key = (trace, kind)
    hit = cache.get(key)
    if hit is not None:
        return hit
    open_start, open_end = _flags(kind)
    if not open_start and not (set(trace) <= tree.alphabet):
        cache[key] = False
        return False
    prefixes = net.__dict__.setdefault("_prefix_cache", {})
    silent = net.__dict__.setdefault("_silent_cache", {})

    def close(markings):
        out = set()
        for m in markings:
            c = silent.get(m)
            if c is None:
                c = silent[m] = _closure(net, (m,), True, budget)
            out |= c
        return frozenset(out)

    root = (open_start, ())
    states = prefixes.get(root)
    if states is None:
        states = prefixes[root] = _closure(net, (net.initial,), not open_start, budget)
    for i, a in enumerate(trace):
        pkey = (open_start, trace[: i + 1])
        nxt = prefixes.get(pkey)
        if nxt is None:
            stepped = set()
            for m in states:
                for t in net.by_label.get(a, ()):
                    if m & t.pre == t.pre:
                        stepped.add((m & ~t.pre) | t.post)
            nxt = prefixes[pkey] = close(stepped)
        states = nxt
        if not states:
            break
    result = bool(states) and (open_end or net.final in states)
    cache[key] = result
    return result


def fitness_cost(tree: ProcessTree, trace: Sequence[str], kind: str = COMPLETE) -> int:
    return align(tree, trace, kind).cost
