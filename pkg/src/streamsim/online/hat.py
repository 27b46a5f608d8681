"""Hoeffding Adaptive Trees with probabilistic leaves.

Both tasks share one tree skeleton:

* classification leaves keep class frequencies (sampled by ``sample``);
  splits maximise information gain, numeric features are summarised by one
  Gaussian per class;
* regression leaves keep a target reservoir plus running mean/variance;
  splits maximise the variance-reduction ratio, numeric features are
  summarised by a threshold sketch capped at 32 keys.

Every node watches the error of its subtree with ADWIN. A detected error
increase starts an alternate subtree that learns in the background and
replaces the original once its windowed error is significantly lower.
Classification leaves additionally watch each class indicator, because a
leaf's expected error is blind to some label shifts (a 50/50 leaf scores 0.5
whatever the new distribution is).
"""
from __future__ import annotations

import bisect
import math
import random
from collections import Counter
from dataclasses import dataclass

from ..errors import TargetTypeMismatch
from .adwin import AdwinDetector
from .hoeffding import HoeffdingBoundParams, hoeffding_epsilon

CLASSIFICATION = "classification"
REGRESSION = "regression"
NUMERIC = "numeric"
CATEGORICAL = "categorical"

N_GAUSSIAN_SPLITS = 10
SKETCH_CAP = 32
LEAF_RESERVOIR = 500
MIN_RESERVOIR = 10


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str  # NUMERIC | CATEGORICAL


class _Welford:
    __slots__ = ("n", "mean", "m2")

    def __init__(self, n=0.0, mean=0.0, m2=0.0):
        self.n, self.mean, self.m2 = n, mean, m2

    def add(self, x, w=1.0):
        self.n += w
        d = x - self.mean
        self.mean += w * d / self.n
        self.m2 += w * d * (x - self.mean)

    @property
    def var(self):
        return self.m2 / self.n if self.n > 0 else 0.0

    def merged(self, other):
        n = self.n + other.n
        if n == 0:
            return _Welford()
        d = other.mean - self.mean
        mean = self.mean + d * other.n / n
        return _Welford(n, mean, self.m2 + other.m2 + d * d * self.n * other.n / n)

    def copy(self):
        return _Welford(self.n, self.mean, self.m2)


class _Gaussian(_Welford):
    __slots__ = ("lo", "hi")

    def __init__(self):
        super().__init__()
        self.lo, self.hi = math.inf, -math.inf

    def add(self, x, w=1.0):
        super().add(x, w)
        self.lo, self.hi = min(self.lo, x), max(self.hi, x)

    def cdf(self, t):
        if self.n == 0:
            return 0.0
        sd = math.sqrt(self.var)
        if sd == 0:
            return 1.0 if self.mean <= t else 0.0
        return 0.5 * (1 + math.erf((t - self.mean) / (sd * math.sqrt(2))))


class _Sketch:
    """Target statistics per numeric threshold, at most ``cap`` keys."""

    __slots__ = ("keys", "stats", "cap")

    def __init__(self, cap=SKETCH_CAP):
        self.keys: list[float] = []
        self.stats: list[_Welford] = []
        self.cap = cap

    def add(self, x, y):
        i = bisect.bisect_left(self.keys, x)
        if i < len(self.keys) and self.keys[i] == x:
            self.stats[i].add(y)
            return
        w = _Welford()
        w.add(y)
        self.keys.insert(i, x)
        self.stats.insert(i, w)
        if len(self.keys) > self.cap:
            gaps = [self.keys[j + 1] - self.keys[j] for j in range(len(self.keys) - 1)]
            j = gaps.index(min(gaps))
            a, b = self.stats[j], self.stats[j + 1]
            self.keys[j] = (self.keys[j] * a.n + self.keys[j + 1] * b.n) / (a.n + b.n)
            self.stats[j] = a.merged(b)
            del self.keys[j + 1], self.stats[j + 1]


class Node:
    def __init__(self, depth: int, delta_adwin: float):
        self.depth = depth
        self.adwin = AdwinDetector(delta_adwin)
        self.alternate: Node | None = None


class Leaf(Node):
    def __init__(self, depth, task, features, delta_adwin, seed, prior=None, monitor=True):
        super().__init__(depth, delta_adwin)
        self.task = task
        self.features = features
        self.n_seen = 0
        self.last_eval = 0
        self.seed = seed
        if task == CLASSIFICATION:
            self.counts: Counter = Counter(prior or {})
            self.observed: Counter = Counter()
            self.observers = {f.name: {} for f in features}
            self.class_monitors: dict = {} if monitor else None
        else:
            self.target = prior.copy() if prior is not None else _Welford()
            self.reservoir: list[float] = []
            self._rng = random.Random(seed)
            self.observers = {f.name: (_Sketch() if f.kind == NUMERIC else {}) for f in features}
            self.class_monitors = None

    # -- prediction ----------------------------------------------------------
    def proba(self) -> dict:
        total = sum(self.counts.values())
        if total <= 0:
            return {}
        return {c: v / total for c, v in self.counts.items()}

    def mean(self) -> float:
        return self.target.mean

    # -- learning --------------------------------------------------------------
    def update(self, x: dict, y):
        self.n_seen += 1
        if self.task == CLASSIFICATION:
            self.counts[y] += 1
            self.observed[y] += 1
            for f in self.features:
                v = x.get(f.name)
                if v is None:
                    continue
                table = self.observers[f.name]
                if f.kind == NUMERIC:
                    g = table.get(y)
                    if g is None:
                        g = table[y] = _Gaussian()
                    g.add(float(v))
                else:
                    table.setdefault(v, Counter())[y] += 1
        else:
            self.target.add(y)
            if len(self.reservoir) < LEAF_RESERVOIR:
                self.reservoir.append(y)
            else:
                j = self._rng.randrange(self.n_seen)
                if j < LEAF_RESERVOIR:
                    self.reservoir[j] = y
            for f in self.features:
                v = x.get(f.name)
                if v is None:
                    continue
                obs = self.observers[f.name]
                if f.kind == NUMERIC:
                    obs.add(float(v), y)
                else:
                    w = obs.get(v)
                    if w is None:
                        w = obs[v] = _Welford()
                    w.add(y)

    def monitor_classes(self, y) -> bool:
        """Feed class-indicator detectors; True when any of them cuts."""
        if self.class_monitors is None:
            return False
        if y not in self.class_monitors:
            self.class_monitors[y] = AdwinDetector(self.adwin.delta)
        fired = False
        for c, det in self.class_monitors.items():
            if det.update(1.0 if c == y else 0.0).drift:
                fired = True
        return fired

    # -- split search ------------------------------------------------------------
    def split_candidates(self):
        """Yield (merit, feature, kind, test_value, left_prior, right_prior)."""
        if self.task == CLASSIFICATION:
            yield from self._class_candidates()
        else:
            yield from self._reg_candidates()

    def _class_candidates(self):
        parent = dict(self.observed)
        h_parent = _entropy(parent.values())
        total = sum(parent.values())
        for f in self.features:
            table = self.observers[f.name]
            best = None
            if f.kind == NUMERIC:
                if not table:
                    continue
                lo = min(g.lo for g in table.values())
                hi = max(g.hi for g in table.values())
                if not lo < hi:
                    continue
                for k in range(1, N_GAUSSIAN_SPLITS + 1):
                    t = lo + (hi - lo) * k / (N_GAUSSIAN_SPLITS + 1)
                    left = {c: g.n * g.cdf(t) for c, g in table.items()}
                    right = {c: g.n - left[c] for c, g in table.items()}
                    merit = _gain(h_parent, total, left, right)
                    if best is None or merit > best[0]:
                        best = (merit, f.name, NUMERIC, t, left, right)
            else:
                for v, cnt in sorted(table.items(), key=lambda kv: str(kv[0])):
                    left = dict(cnt)
                    right = {c: parent.get(c, 0) - left.get(c, 0) for c in parent}
                    merit = _gain(h_parent, total, left, right)
                    if best is None or merit > best[0]:
                        best = (merit, f.name, CATEGORICAL, v, left, right)
            if best is not None:
                yield best

    def _reg_candidates(self):
        parent = self.target
        if parent.n < 2 or parent.var <= 0:
            return
        for f in self.features:
            obs = self.observers[f.name]
            best = None
            if f.kind == NUMERIC:
                total = _Welford()
                for st in obs.stats:
                    total = total.merged(st)
                left = _Welford()
                for i in range(len(obs.keys) - 1):
                    left = left.merged(obs.stats[i])
                    right = _subtract(total, left)
                    merit = _var_reduction(parent, left, right)
                    if best is None or merit > best[0]:
                        t = (obs.keys[i] + obs.keys[i + 1]) / 2
                        best = (merit, f.name, NUMERIC, t, left.copy(), right)
            else:
                for v, w in sorted(obs.items(), key=lambda kv: str(kv[0])):
                    right = _subtract(parent, w)
                    merit = _var_reduction(parent, w, right)
                    if best is None or merit > best[0]:
                        best = (merit, f.name, CATEGORICAL, v, w.copy(), right)
            if best is not None:
                yield best

    def sample(self, rng: random.Random):
        if self.task == CLASSIFICATION:
            keys = sorted(self.counts, key=str)
            weights = [self.counts[k] for k in keys]
            if not keys or sum(weights) <= 0:
                return None
            return rng.choices(keys, weights=weights)[0]
        if len(self.reservoir) >= MIN_RESERVOIR:
            return self.reservoir[rng.randrange(len(self.reservoir))]
        if self.target.n == 0:
            return None
        return rng.gauss(self.target.mean, math.sqrt(self.target.var))


def _entropy(counts) -> float:
    counts = [c for c in counts if c > 0]
    total = sum(counts)
    if total <= 0:
        return 0.0
    return -sum(c / total * math.log2(c / total) for c in counts)


def _gain(h_parent, total, left, right) -> float:
    nl, nr = sum(left.values()), sum(right.values())
    if total <= 0 or nl <= 0 or nr <= 0:
        return 0.0
    return h_parent - (nl / total) * _entropy(left.values()) - (nr / total) * _entropy(right.values())


def _subtract(a: _Welford, b: _Welford) -> _Welford:
    n = a.n - b.n
    if n <= 0:
        return _Welford()
    mean = (a.mean * a.n - b.mean * b.n) / n
    m2 = a.m2 - b.m2 - (b.mean - a.mean) ** 2 * b.n - (mean - a.mean) ** 2 * n
    return _Welford(n, mean, max(m2, 0.0))


def _var_reduction(parent, left, right) -> float:
    if parent.var <= 0 or left.n <= 0 or right.n <= 0:
        return 0.0
    child = (left.n * left.var + right.n * right.var) / parent.n
    return max(0.0, (parent.var - child) / parent.var)


class Split(Node):
    def __init__(self, depth, feature, kind, value, children, delta_adwin):
        super().__init__(depth, delta_adwin)
        self.feature = feature
        self.kind = kind
        self.value = value
        self.children = children  # [left, right]

    def branch(self, x: dict) -> int:
        v = x.get(self.feature)
        if v is None:
            return 1
        if self.kind == NUMERIC:
            try:
                return 0 if float(v) <= self.value else 1
            except (TypeError, ValueError):
                return 1
        return 0 if v == self.value else 1


class HoeffdingAdaptiveTree:
    """One probabilistic Hoeffding Adaptive Tree.

    ``features`` fixes the schema: a list of ``Feature`` or ``(name, kind)``.
    With ``drift_detection=False`` the tree is a plain Hoeffding tree, which
    the batch baselines use through ``fit_batch``.
    """

    def __init__(
        self,
        task: str,
        features,
        params: HoeffdingBoundParams | None = None,
        *,
        delta_adwin: float = 0.002,
        drift_detection: bool = True,
        switch_threshold: int = 300,
        switch_delta: float = 0.05,
        seed: int = 0,
    ):
        if task not in (CLASSIFICATION, REGRESSION):
            raise ValueError(f"unknown task {task!r}")
        self.task = task
        self.features = tuple(f if isinstance(f, Feature) else Feature(*f) for f in features)
        self.params = params or HoeffdingBoundParams()
        self.delta_adwin = delta_adwin
        self.drift_detection = drift_detection
        self.switch_threshold = switch_threshold
        self.switch_delta = switch_delta
        self.seed = seed
        self._leaf_counter = 0
        self.n_seen = 0
        self.y_lo = math.inf
        self.y_hi = -math.inf
        self.classes: set = set()
        self.n_splits = 0
        self.n_alternates = 0
        self.n_switches = 0
        self.root: Node = self._new_leaf(0)

    # -- structure helpers -----------------------------------------------------
    def _new_leaf(self, depth, prior=None) -> Leaf:
        self._leaf_counter += 1
        return Leaf(
            depth,
            self.task,
            self.features,
            self.delta_adwin,
            seed=self.seed * 1_000_003 + self._leaf_counter,
            prior=prior,
            monitor=self.drift_detection,
        )

    def leaf_for(self, x: dict, node: Node | None = None) -> Leaf:
        node = self.root if node is None else node
        while isinstance(node, Split):
            node = node.children[node.branch(x)]
        return node

    def depth(self) -> int:
        def d(n):
            if isinstance(n, Split):
                return 1 + max(d(c) for c in n.children)
            return 0

        def all_depths(n):
            out = [n.depth + d(n)]
            if n.alternate is not None:
                out.append(n.alternate.depth + d(n.alternate))
            if isinstance(n, Split):
                for c in n.children:
                    out.extend(all_depths(c))
            return out

        return max(all_depths(self.root))

    def leaves(self, node: Node | None = None) -> list[Leaf]:
        node = self.root if node is None else node
        if isinstance(node, Split):
            return [leaf for c in node.children for leaf in self.leaves(c)]
        return [node]

    def n_nodes(self) -> int:
        def count(n):
            return 1 + (sum(count(c) for c in n.children) if isinstance(n, Split) else 0)

        return count(self.root)

    # -- prediction ---------------------------------------------------------------
    def predict_proba(self, x: dict) -> dict:
        return self.leaf_for(x).proba()

    def predict(self, x: dict):
        leaf = self.leaf_for(x)
        if self.task == CLASSIFICATION:
            p = leaf.proba()
            return max(sorted(p, key=str), key=p.get) if p else None
        return leaf.mean()

    def sample(self, x: dict, rng: random.Random):
        return self.leaf_for(x).sample(rng)

    # -- learning --------------------------------------------------------------------
    def _check_target(self, y):
        if self.task == REGRESSION:
            if isinstance(y, bool) or not isinstance(y, (int, float)) or not math.isfinite(y):
                raise TargetTypeMismatch(f"regression target must be a finite number, got {y!r}")
        elif isinstance(y, float):
            raise TargetTypeMismatch(f"classification target must be a label, got {y!r}")

    def _error(self, node: Node, x: dict, y) -> float:
        leaf = self.leaf_for(x, node)
        if self.task == CLASSIFICATION:
            total = sum(leaf.counts.values())
            return 1.0 - (leaf.counts.get(y, 0) / total if total > 0 else 0.0)
        span = self.y_hi - self.y_lo
        if leaf.target.n == 0 or span <= 0:
            return 0.0 if leaf.target.n else 1.0
        return min(1.0, abs(y - leaf.target.mean) / span)

    def learn_one(self, x: dict, y):
        self._check_target(y)
        self.n_seen += 1
        if self.task == REGRESSION:
            y = float(y)
            self.y_lo, self.y_hi = min(self.y_lo, y), max(self.y_hi, y)
        else:
            self.classes.add(y)
        self._learn(self.root, x, y, self._set_root)

    def _set_root(self, node: Node):
        self.root = node

    def _learn(self, node: Node, x: dict, y, put):
        """Learn below ``node``; ``put(new)`` swaps ``node`` out of its slot."""
        if self.drift_detection:
            err = self._error(node, x, y)
            old = node.adwin.estimation
            drift = node.adwin.update(err).drift
            increased = drift and node.adwin.estimation > old
            if isinstance(node, Leaf) and node.monitor_classes(y):
                increased = True
            alt = node.alternate
            if increased and alt is None:
                node.alternate = self._new_leaf(node.depth)
                self.n_alternates += 1
            elif alt is not None and alt.adwin.width >= self.switch_threshold:
                old_err = node.adwin.estimation
                alt_err = alt.adwin.estimation
                f_n = 1.0 / alt.adwin.width + 1.0 / max(node.adwin.width, 1)
                bound = math.sqrt(2.0 * old_err * (1.0 - old_err) * math.log(2.0 / self.switch_delta) * f_n)
                if old_err - alt_err > bound:
                    node.alternate = None
                    put(alt)
                    self.n_switches += 1
                    self._descend(alt, x, y, put)
                    return
                if alt_err - old_err > bound:
                    node.alternate = None
            if node.alternate is not None:
                self._learn(node.alternate, x, y, lambda new, host=node: setattr(host, "alternate", new))
        self._descend(node, x, y, put)

    def _descend(self, node: Node, x: dict, y, put):
        if isinstance(node, Split):
            b = node.branch(x)
            self._learn(node.children[b], x, y, lambda new, c=node.children, i=b: c.__setitem__(i, new))
        else:
            node.update(x, y)
            if node.n_seen - node.last_eval >= self.params.grace_period:
                node.last_eval = node.n_seen
                self._attempt_split(node, put)

    def _split_range(self) -> float:
        if self.task == CLASSIFICATION:
            return math.log2(max(len(self.classes), 2))
        return 1.0

    def _attempt_split(self, leaf: Leaf, put, *, force: bool = False) -> bool:
        if leaf.depth >= self.params.max_depth:
            return False
        if self.task == CLASSIFICATION and sum(1 for v in leaf.observed.values() if v > 0) < 2:
            return False
        cands = sorted(leaf.split_candidates(), key=lambda c: -c[0])
        if not cands or cands[0][0] <= 0:
            return False
        best = cands[0]
        second = cands[1][0] if len(cands) > 1 else 0.0
        n = max(leaf.n_seen, 1)
        eps = hoeffding_epsilon(self.params, n, self._split_range())
        if not force and not (best[0] - second > eps or eps < self.params.tie_threshold):
            return False
        _, feature, kind, value, left, right = best
        children = [self._new_leaf(leaf.depth + 1, left), self._new_leaf(leaf.depth + 1, right)]
        split = Split(leaf.depth, feature, kind, value, children, self.delta_adwin)
        split.adwin = leaf.adwin
        put(split)
        self.n_splits += 1
        return True

    # -- batch mode ------------------------------------------------------------------
    def final_split_pass(self):
        """Try one split at every leaf, ignoring the grace period."""

        def visit(node, put):
            if isinstance(node, Split):
                for i, c in enumerate(list(node.children)):
                    visit(c, lambda new, ch=node.children, i=i: ch.__setitem__(i, new))
            elif node.n_seen > 0:
                self._attempt_split(node, put)

        visit(self.root, self._set_root)

    def refill_leaves(self, instances):
        """Reset leaf payloads and route ``instances`` through the frozen structure."""
        for leaf in self.leaves():
            fresh = self._new_leaf(leaf.depth)
            leaf.__dict__.update({k: v for k, v in fresh.__dict__.items() if k not in ("adwin", "alternate")})
        for x, y in instances:
            if self.task == REGRESSION:
                y = float(y)
            self.leaf_for(x).update(x, y)

    def fit_batch(self, instances):
        """Single pass, final split pass, then leaf refill: a frozen batch model."""
        instances = list(instances)
        for x, y in instances:
            self.learn_one(x, y)
        self.final_split_pass()
        self.refill_leaves(instances)
        return self

    # -- export ----------------------------------------------------------------------
    def to_dict(self) -> dict:
        def dump(n):
            if isinstance(n, Split):
                out = {
                    "split": n.feature,
                    "kind": n.kind,
                    "value": n.value,
                    "children": [dump(c) for c in n.children],
                }
            elif self.task == CLASSIFICATION:
                out = {"n": n.n_seen, "counts": {str(k): v for k, v in sorted(n.counts.items(), key=lambda kv: str(kv[0]))}}
            else:
                out = {"n": n.n_seen, "mean": n.target.mean, "var": n.target.var, "reservoir": len(n.reservoir)}
            out["adwin_width"] = n.adwin.width
            if n.alternate is not None:
                out["alternate"] = dump(n.alternate)
            return out

        return {
            "task": self.task,
            "features": [[f.name, f.kind] for f in self.features],
            "grace_period": self.params.grace_period,
            "max_depth": self.params.max_depth,
            "n_seen": self.n_seen,
            "root": dump(self.root),
        }


def hat_learn_one(t: HoeffdingAdaptiveTree, x: dict, y) -> HoeffdingAdaptiveTree:
    t.learn_one(x, y)
    return t


def hat_sample(t: HoeffdingAdaptiveTree, x: dict, rng: random.Random):
    return t.sample(x, rng)
