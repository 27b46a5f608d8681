"""Process trees: immutable block-structured control-flow models.

Textual notation (parser and printer round-trip)::

    →(a, ×(b, τ), ∧(c, d), ⟲(e, f))

ASCII aliases ``->``, ``X``, ``+``, ``*`` and ``tau`` are accepted on input.
Labels with spaces or reserved characters are quoted: ``'loan offer'``.

Node ids are assigned when a node first enters a tree and are never reused
within a lineage, so decision points keep their identity across repairs.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

from .errors import TreeSyntaxError

ACT = "act"
TAU = "tau"
SEQ = "seq"
XOR = "xor"
AND = "and"
LOOP = "loop"
OPERATORS = (SEQ, XOR, AND, LOOP)

SYMBOL = {SEQ: "→", XOR: "×", AND: "∧", LOOP: "⟲"}
_OP_TOKENS = {"→": SEQ, "->": SEQ, "×": XOR, "X": XOR, "∧": AND, "+": AND, "⟲": LOOP, "*": LOOP}
TAU_LABEL = "τ"

EXIT = "exit"
REDO = "redo"


@dataclass(frozen=True)
class Node:
    kind: str
    label: str | None = None
    children: tuple["Node", ...] = ()
    id: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.kind in (ACT, TAU)

    def walk(self) -> Iterator["Node"]:
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children))

    def __str__(self):
        return to_string(self)


def act(label: str) -> Node:
    return Node(ACT, label)


def tau() -> Node:
    return Node(TAU)


def _op(kind, children):
    children = tuple(children)
    if kind == LOOP:
        if len(children) < 2:
            raise ValueError("loop needs a do and at least one redo child")
        if len(children) > 2:
            children = (children[0], Node(XOR, None, children[1:]))
        return Node(LOOP, None, children)
    if len(children) == 1:
        return children[0]
    if not children:
        raise ValueError(f"{kind} needs children")
    return Node(kind, None, children)


def seq(*children) -> Node:
    return _op(SEQ, children)


def xor(*children) -> Node:
    return _op(XOR, children)


def par(*children) -> Node:
    return _op(AND, children)


def loop(do, *redo) -> Node:
    return _op(LOOP, (do,) + redo)


def flower(activities) -> Node:
    acts = [act(a) for a in sorted(activities)]
    if not acts:
        return tau()
    return loop(tau(), xor(*acts) if len(acts) > 1 else acts[0])


@dataclass(frozen=True, eq=False)
class ProcessTree:
    root: Node
    next_id: int = 0

    @classmethod
    def build(cls, root: Node, next_id: int = 0) -> "ProcessTree":
        return cls(root, next_id).adopt(root)

    def adopt(self, root: Node) -> "ProcessTree":
        """Return a tree with ``root``; nodes without an id get fresh ones."""
        counter = [self.next_id]

        # preorder numbering: assign parent ids before children
        def number(n: Node) -> Node:
            nid = n.id
            if nid < 0:
                nid = counter[0]
                counter[0] += 1
            children = tuple(number(c) for c in n.children)
            if nid == n.id and all(a is b for a, b in zip(children, n.children)):
                return n
            return Node(n.kind, n.label, children, nid)

        new_root = number(root)
        return ProcessTree(new_root, max(counter[0], self.next_id))

    @classmethod
    def parse(cls, text: str) -> "ProcessTree":
        return cls.build(parse(text))

    def __str__(self):
        return to_string(self.root)

    def __repr__(self):
        return f"ProcessTree({to_string(self.root)!r})"

    def __eq__(self, other):
        return isinstance(other, ProcessTree) and self.root == other.root

    def __hash__(self):
        return id(self)

    @cached_property
    def nodes(self) -> dict[int, Node]:
        return {n.id: n for n in self.root.walk()}

    @cached_property
    def parents(self) -> dict[int, int | None]:
        out: dict[int, int | None] = {self.root.id: None}
        for n in self.root.walk():
            for c in n.children:
                out[c.id] = n.id
        return out

    @cached_property
    def alphabet(self) -> frozenset:
        return frozenset(n.label for n in self.root.walk() if n.kind == ACT)

    @cached_property
    def net(self):
        from .alignment import compile_net

        return compile_net(self)

    def path_to_root(self, node_id: int) -> list[int]:
        out = []
        cur: int | None = node_id
        while cur is not None:
            out.append(cur)
            cur = self.parents[cur]
        return out

    def lca(self, a: int, b: int) -> int:
        up = set(self.path_to_root(a))
        for n in self.path_to_root(b):
            if n in up:
                return n
        return self.root.id

    def child_towards(self, ancestor: int, node_id: int) -> int:
        """Index of the child of ``ancestor`` on the path to ``node_id``."""
        path = self.path_to_root(node_id)
        below = path[path.index(ancestor) - 1]
        return [c.id for c in self.nodes[ancestor].children].index(below)

    def replace(self, node_id: int, new: Node) -> "ProcessTree":
        """Copy-on-write substitution of one subtree; untouched subtrees are shared."""
        path = self.path_to_root(node_id)[::-1]

        def rebuild(n: Node, depth: int) -> Node:
            if depth == len(path) - 1:
                return new
            target = path[depth + 1]
            children = tuple(rebuild(c, depth + 1) if c.id == target else c for c in n.children)
            return Node(n.kind, n.label, children, n.id)

        return self.adopt(rebuild(self.root, 0))

    def depth(self) -> int:
        def d(n):
            return 1 + max((d(c) for c in n.children), default=0)

        return d(self.root)


def branch_label(node: Node) -> str:
    if node.kind == ACT:
        return node.label
    if node.kind == TAU:
        return TAU_LABEL
    return to_string(node)


def decision_points(tree: ProcessTree) -> list[tuple[int, tuple[str, ...]]]:
    """Every xor node and every loop (redo/exit choice), in preorder.

    Class labels used by the branching models are child positions; the
    returned labels are for display.
    """
    out = []
    for n in tree.root.walk():
        if n.kind == XOR:
            out.append((n.id, tuple(branch_label(c) for c in n.children)))
        elif n.kind == LOOP:
            out.append((n.id, (EXIT, REDO)))
    return out


# --------------------------------------------------------------------------
# notation

_RESERVED = set("(),'\"") | set("→×∧⟲")


def _quote(label: str) -> str:
    plain = (
        label
        and label.strip() == label
        and not any(ch in _RESERVED or ch.isspace() for ch in label)
        and not label.startswith("->")
        and label not in ("tau", TAU_LABEL, "X", "+", "*", "seq", "xor", "and", "loop")
    )
    if plain:
        return label
    return "'" + label.replace("\\", "\\\\").replace("'", "\\'") + "'"


def to_string(node: Node) -> str:
    if node.kind == ACT:
        return _quote(node.label)
    if node.kind == TAU:
        return TAU_LABEL
    return SYMBOL[node.kind] + "(" + ", ".join(to_string(c) for c in node.children) + ")"


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "(),":
            yield ch
            i += 1
        elif ch in "'\"":
            quote, j, buf = ch, i + 1, []
            while j < n and text[j] != quote:
                if text[j] == "\\" and j + 1 < n:
                    j += 1
                buf.append(text[j])
                j += 1
            if j >= n:
                raise TreeSyntaxError(f"unterminated quote at {i}")
            yield ("label", "".join(buf))
            i = j + 1
        elif text.startswith("->", i):
            yield ("op", SEQ)
            i += 2
        elif ch in "→×∧⟲":
            yield ("op", _OP_TOKENS[ch])
            i += 1
        else:
            j = i
            while j < n and text[j] not in "()," and not text[j].isspace():
                j += 1
            word = text[i:j]
            # "X(", "+(", "*(" are operators only when an argument list follows
            k = j
            while k < n and text[k].isspace():
                k += 1
            if word in ("X", "+", "*", "seq", "xor", "and", "loop") and k < n and text[k] == "(":
                yield ("op", {"seq": SEQ, "xor": XOR, "and": AND, "loop": LOOP}.get(word) or _OP_TOKENS[word])
            elif word in ("tau", TAU_LABEL):
                yield ("tau", None)
            else:
                yield ("label", word)
            i = j


def parse(text: str) -> Node:
    toks = list(_tokens(text))
    pos = 0

    def expect(tok):
        nonlocal pos
        if pos >= len(toks) or toks[pos] != tok:
            got = toks[pos] if pos < len(toks) else "end of input"
            raise TreeSyntaxError(f"expected {tok!r}, got {got!r}")
        pos += 1

    def node():
        nonlocal pos
        if pos >= len(toks):
            raise TreeSyntaxError("unexpected end of input")
        tok = toks[pos]
        pos += 1
        if isinstance(tok, tuple):
            kind, val = tok
            if kind == "label":
                return act(val)
            if kind == "tau":
                return tau()
            expect("(")
            children = [node()]
            while pos < len(toks) and toks[pos] == ",":
                pos += 1
                children.append(node())
            expect(")")
            try:
                return _op(val, children)
            except ValueError as exc:
                raise TreeSyntaxError(str(exc)) from None
        raise TreeSyntaxError(f"unexpected {tok!r}")

    root = node()
    if pos != len(toks):
        raise TreeSyntaxError(f"trailing input at token {pos}")
    return root


# --------------------------------------------------------------------------
# sampling


def _sample(node: Node, rng: random.Random, redo_p: float, cap: int) -> list[str]:
    k = node.kind
    if k == ACT:
        return [node.label]
    if k == TAU:
        return []
    if k == SEQ:
        out = []
        for c in node.children:
            out.extend(_sample(c, rng, redo_p, cap))
        return out
    if k == XOR:
        return _sample(node.children[rng.randrange(len(node.children))], rng, redo_p, cap)
    if k == AND:
        branches = [_sample(c, rng, redo_p, cap) for c in node.children]
        return interleave(branches, rng)
    do, redo = node.children
    out = _sample(do, rng, redo_p, cap)
    for _ in range(cap - 1):
        if rng.random() >= redo_p:
            break
        out.extend(_sample(redo, rng, redo_p, cap))
        out.extend(_sample(do, rng, redo_p, cap))
    return out


def interleave(branches: list[list[str]], rng: random.Random) -> list[str]:
    """Uniformly random shuffle-product member of the branch sequences."""
    idx = [0] * len(branches)
    remaining = [len(b) for b in branches]
    out = []
    total = sum(remaining)
    while total:
        r = rng.randrange(total)
        for j, left in enumerate(remaining):
            if r < left:
                break
            r -= left
        out.append(branches[j][idx[j]])
        idx[j] += 1
        remaining[j] -= 1
        total -= 1
    return out


def language_sample(tree: ProcessTree | Node, n: int, rng_seed=None, *, redo_p: float = 0.3, max_loops: int = 50) -> list[tuple[str, ...]]:
    """Draw ``n`` traces by random descent: uniform xor choices, uniform
    interleavings, loop redo with probability ``redo_p`` (at most ``max_loops``
    iterations)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    root = tree.root if isinstance(tree, ProcessTree) else tree
    rng = random.Random(rng_seed)
    return [tuple(_sample(root, rng, redo_p, max_loops)) for _ in range(n)]
