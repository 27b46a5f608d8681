"""Incremental control-flow update from trace fragments.

Each repair only adds optional behaviour, so the language of the tree grows
monotonically:

* a log move on ``a`` inserts ``×(a, τ)``: as a new sequence child right after
  the branch holding the preceding synchronous move when the lowest common
  ancestor of the surrounding synchronous moves is a sequence, otherwise
  directly after (or before) the neighbouring synchronous leaf, or in front of
  the root when the fragment has no synchronous move at all;
* a visible model move on leaf ``v`` rewrites ``v`` to ``×(v, τ)``.

Deviations are tried in order and the first repair that lowers the optimal
alignment cost is kept. Open-start fragments can defeat every local repair
(the cheapest alignment may skip to the end of the model and log-move the
whole fragment); the fallback then adds the fragment itself as an
alternative to the root, ``×(root, →(fragment))``. Each accepted step lowers
the cost, so the loop terminates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .alignment import DEFAULT_BUDGET, Alignment, align
from .errors import StateSpaceBudgetExceeded
from .stream import TraceFragment
from .tree import SEQ, Node, ProcessTree, act, seq, tau, xor


@dataclass
class RepairReport:
    repaired: int = 0
    fitting: int = 0
    rejected: list = field(default_factory=list)
    repairs: list = field(default_factory=list)


def _optional(activity: str) -> Node:
    return xor(act(activity), tau())


def repair_once(tree: ProcessTree, alignment: Alignment, which: int = 0) -> tuple[ProcessTree, str]:
    """Fix deviation number ``which`` of ``alignment``; returns the new tree and a note."""
    moves = alignment.moves
    devs = alignment.deviations()
    if not devs:
        return tree, "fits"
    d = devs[which]
    move = moves[d]
    if move.kind == "model":
        leaf = tree.nodes[move.transition.node_id]
        return tree.replace(leaf.id, xor(leaf, tau())), f"skip {leaf.label}"

    a = move.activity
    before = next((moves[j].transition.node_id for j in range(d - 1, -1, -1) if moves[j].kind == "sync"), None)
    after = next((moves[j].transition.node_id for j in range(d + 1, len(moves)) if moves[j].kind == "sync"), None)
    if before is not None and after is not None:
        anc = tree.lca(before, after)
        node = tree.nodes[anc]
        if node.kind == SEQ and anc not in (before, after):
            pos = tree.child_towards(anc, before) + 1
            children = node.children[:pos] + (_optional(a),) + node.children[pos:]
            return tree.replace(anc, Node(SEQ, None, children, node.id)), f"insert {a} in {anc}@{pos}"
    if before is not None:
        leaf = tree.nodes[before]
        return tree.replace(before, seq(leaf, _optional(a))), f"insert {a} after {leaf.label}"
    if after is not None:
        leaf = tree.nodes[after]
        return tree.replace(after, seq(_optional(a), leaf)), f"insert {a} before {leaf.label}"
    return tree.adopt(seq(_optional(a), tree.root)), f"insert {a} at root"


def _fallback(tree: ProcessTree, trace) -> ProcessTree:
    path = seq(*[act(a) for a in trace]) if len(trace) > 1 else act(trace[0]) if trace else tau()
    return tree.adopt(xor(tree.root, path))


def _repair_step(tree: ProcessTree, al: Alignment, trace, kind, budget):
    for which in range(len(al.deviations())):
        cand, note = repair_once(tree, al, which)
        al2 = align(cand, trace, kind, budget=budget)
        if al2.cost < al.cost:
            return cand, note, al2
    cand = _fallback(tree, trace)
    return cand, "alternative path", align(cand, trace, kind, budget=budget)


def repair_fragments(tree: ProcessTree, fragments, *, budget: int = DEFAULT_BUDGET) -> tuple[ProcessTree, RepairReport]:
    """Repair ``tree`` until every fragment fits.

    ``fragments`` holds TraceFragments or ``(activities, kind)`` pairs. Fragments
    whose alignment exceeds the state budget are listed in the report and leave
    the tree untouched.
    """
    report = RepairReport()
    for frag in fragments:
        if isinstance(frag, TraceFragment):
            case_id, trace, kind = frag.case_id, frag.activities, frag.kind
        else:
            case_id, (trace, kind) = None, frag
        try:
            al = align(tree, trace, kind, budget=budget)
        except StateSpaceBudgetExceeded:
            report.rejected.append(case_id)
            continue
        if al.cost == 0:
            report.fitting += 1
            continue
        before_repair = tree
        while al.cost > 0:
            try:
                tree, note, al = _repair_step(tree, al, trace, kind, budget)
            except StateSpaceBudgetExceeded:
                report.rejected.append(case_id)
                tree = before_repair
                break
            report.repairs.append((case_id, note))
        else:
            report.repaired += 1
    return tree, report


def incremental_update(tree: ProcessTree, fragments, *, budget: int = DEFAULT_BUDGET) -> ProcessTree:
    return repair_fragments(tree, fragments, budget=budget)[0]
