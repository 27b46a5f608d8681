"""Inductive Miner (infrequent variant) over directly-follows graphs.

Cuts are tried in the order xor, sequence, parallel, loop on the full DFG; if
none applies and ``noise_threshold > 0`` the DFG is filtered (edges below
``noise_threshold`` times the strongest outgoing edge of their source are
dropped) and the cuts are retried. When nothing applies the flower model over
the remaining alphabet is returned.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyInput
from .tree import Node, ProcessTree, act, flower, loop, par, seq, tau, xor

Log = Counter  # Counter[tuple[str, ...], int]


@dataclass
class DirectlyFollowsGraph:
    edges: Counter = field(default_factory=Counter)
    start: Counter = field(default_factory=Counter)
    end: Counter = field(default_factory=Counter)
    activities: Counter = field(default_factory=Counter)

    @classmethod
    def from_log(cls, log: Log) -> "DirectlyFollowsGraph":
        g = cls()
        for trace, n in log.items():
            if not trace:
                continue
            g.start[trace[0]] += n
            g.end[trace[-1]] += n
            for a in trace:
                g.activities[a] += n
            for a, b in zip(trace, trace[1:]):
                g.edges[(a, b)] += n
        return g

    @property
    def nodes(self) -> set:
        return set(self.activities)

    def filtered(self, threshold: float) -> "DirectlyFollowsGraph":
        strongest: dict[str, int] = {}
        for (a, _), w in self.edges.items():
            strongest[a] = max(strongest.get(a, 0), w)
        edges = Counter({(a, b): w for (a, b), w in self.edges.items() if w >= threshold * strongest[a]})
        top_s = max(self.start.values(), default=0)
        top_e = max(self.end.values(), default=0)
        start = Counter({a: w for a, w in self.start.items() if w >= threshold * top_s})
        end = Counter({a: w for a, w in self.end.items() if w >= threshold * top_e})
        return DirectlyFollowsGraph(edges, start, end, Counter(self.activities))


def _succ(edges, nodes):
    out = {a: set() for a in nodes}
    for a, b in edges:
        if a in out and b in out:
            out[a].add(b)
    return out


def _components(nodes, pairs) -> list[set]:
    parent = {a: a for a in nodes}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        if a in parent and b in parent:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    groups: dict = {}
    for a in sorted(nodes):
        groups.setdefault(find(a), set()).add(a)
    return list(groups.values())


def _reach(succ) -> dict:
    reach = {}
    for a in succ:
        seen, stack = set(), list(succ[a])
        while stack:
            b = stack.pop()
            if b not in seen:
                seen.add(b)
                stack.extend(succ[b])
        reach[a] = seen
    return reach


def xor_cut(g: DirectlyFollowsGraph):
    comps = _components(g.nodes, g.edges)
    return comps if len(comps) > 1 else None


def sequence_cut(g: DirectlyFollowsGraph):
    nodes = g.nodes
    reach = _reach(_succ(g.edges, nodes))
    # strongly connected components, then merge pairwise-unreachable groups
    groups = _components(nodes, [(a, b) for a in nodes for b in reach[a] if a in reach.get(b, ())])

    def g_reach(x, y):
        return any(reach[a] & y for a in x)

    changed = True
    while changed and len(groups) > 1:
        changed = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if not g_reach(groups[i], groups[j]) and not g_reach(groups[j], groups[i]):
                    groups[i] = groups[i] | groups[j]
                    del groups[j]
                    changed = True
                    break
            if changed:
                break
    if len(groups) < 2:
        return None
    # order: x before y when x reaches y
    ordered = sorted(groups, key=lambda x: -sum(1 for y in groups if y is not x and g_reach(x, y)))
    for i, x in enumerate(ordered):
        for y in ordered[i + 1:]:
            for a in x:
                if not y <= reach[a]:
                    return None
            for b in y:
                if reach[b] & x:
                    return None
    return ordered


def parallel_cut(g: DirectlyFollowsGraph):
    nodes = sorted(g.nodes)
    edges = g.edges
    pairs = [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:] if not ((a, b) in edges and (b, a) in edges)]
    parts = _components(nodes, pairs)
    if len(parts) < 2:
        return None
    good = [p for p in parts if p & set(g.start) and p & set(g.end)]
    bad = [p for p in parts if not (p & set(g.start) and p & set(g.end))]
    if bad:
        merged = set().union(*bad)
        if good and not (merged & set(g.start) and merged & set(g.end)):
            good[0] = good[0] | merged
        else:
            good.append(merged)
    if len(good) < 2:
        return None
    # every pair across parts must be connected both ways
    for i, p in enumerate(good):
        for q in good[i + 1:]:
            for a in p:
                for b in q:
                    if (a, b) not in edges or (b, a) not in edges:
                        return None
    return good


def loop_cut(g: DirectlyFollowsGraph):
    starts, ends = set(g.start), set(g.end)
    do = starts | ends
    rest = g.nodes - do
    if not rest:
        return None
    comps = _components(rest, [(a, b) for a, b in g.edges if a in rest and b in rest])
    redo = []
    for comp in comps:
        out_edges = [(a, b) for a, b in g.edges if a in comp and b not in comp]
        in_edges = [(a, b) for a, b in g.edges if b in comp and a not in comp]
        ok = bool(out_edges) and bool(in_edges)
        ok = ok and all(b in starts for _, b in out_edges) and all(a in ends for a, _ in in_edges)
        ok = ok and all(any((e, b) in g.edges for b in comp) for e in ends)
        ok = ok and all(any((a, s) in g.edges for a in comp) for s in starts)
        if ok:
            redo.append(comp)
        else:
            do |= comp
    if not redo:
        return None
    return [do] + redo


def _project(trace, part):
    return tuple(a for a in trace if a in part)


def _split_xor(log: Log, parts) -> list[Log]:
    subs = [Counter() for _ in parts]
    for trace, n in log.items():
        scores = [sum(1 for a in trace if a in p) for p in parts]
        k = scores.index(max(scores))
        subs[k][_project(trace, parts[k])] += n
    return subs


def _split_project(log: Log, parts) -> list[Log]:
    subs = [Counter() for _ in parts]
    for trace, n in log.items():
        for k, p in enumerate(parts):
            subs[k][_project(trace, p)] += n
    return subs


def _split_loop(log: Log, parts) -> list[Log]:
    subs = [Counter() for _ in parts]
    where = {}
    for k, p in enumerate(parts):
        for a in p:
            where[a] = k
    for trace, n in log.items():
        runs: list[tuple[int, list]] = []
        for a in trace:
            k = where.get(a)
            if k is None:
                continue
            if runs and runs[-1][0] == k:
                runs[-1][1].append(a)
            else:
                runs.append((k, [a]))
        # normalise to do (redo do)*
        norm: list[tuple[int, list]] = []
        for k, r in runs:
            if not norm and k != 0:
                norm.append((0, []))
            elif norm and (norm[-1][0] == 0) == (k == 0):
                norm.append((0 if k else 1, []))
            norm.append((k, r))
        if not norm or norm[-1][0] != 0:
            norm.append((0, []))
        for k, r in norm:
            subs[k][tuple(r)] += n
    return subs


def _mine(log: Log, noise: float, depth: int) -> Node:
    total = sum(log.values())
    if total == 0:
        return tau()
    empties = log.get((), 0)
    if empties == total:
        return tau()
    if empties:
        if noise > 0 and empties / total < noise:
            log = Counter({t: n for t, n in log.items() if t})
        else:
            rest = Counter({t: n for t, n in log.items() if t})
            return xor(tau(), _mine(rest, noise, depth + 1))
    alphabet = {a for t in log for a in t}
    if len(alphabet) == 1:
        (a,) = alphabet
        if all(len(t) == 1 for t in log):
            return act(a)
        return loop(act(a), tau())
    if depth > 200:
        return flower(alphabet)

    g = DirectlyFollowsGraph.from_log(log)
    graphs = [g]
    if noise > 0:
        graphs.append(g.filtered(noise))
    for attempt, graph in enumerate(graphs):
        parts = xor_cut(graph)
        if parts:
            subs = _split_xor(log, parts)
            return xor(*[_mine(s, noise, depth + 1) for s in subs if sum(s.values())])
        parts = sequence_cut(graph)
        if parts:
            return seq(*[_mine(s, noise, depth + 1) for s in _split_project(log, parts)])
        parts = parallel_cut(graph)
        if parts:
            return par(*[_mine(s, noise, depth + 1) for s in _split_project(log, parts)])
        parts = loop_cut(graph)
        if parts:
            subs = _split_loop(log, parts)
            do = _mine(subs[0], noise, depth + 1)
            redo = [_mine(s, noise, depth + 1) for s in subs[1:] if sum(s.values())]
            if not redo:
                redo = [tau()]
            return loop(do, *redo)
    return flower(alphabet)


def discover_initial_tree(traces: Iterable[Sequence[str]], noise_threshold: float = 0.2) -> ProcessTree:
    """Discover a process tree from complete traces (activity sequences)."""
    if not 0 <= noise_threshold < 1:
        raise ValueError("noise_threshold must be in [0, 1)")
    log = Counter(tuple(t) for t in traces)
    if not log:
        raise EmptyInput("no traces to discover from")
    return ProcessTree.build(_mine(log, noise_threshold, 0))
