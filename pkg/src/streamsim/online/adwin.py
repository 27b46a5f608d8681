"""ADWIN drift detector over an exponential histogram.

Row ``i`` holds up to ``M`` buckets of ``2**i`` elements each, oldest first;
higher rows are older. Each bucket keeps its sum and its internal variance
(sum of squared deviations), so the window's mean and variance stay exact
under compression.
"""
from __future__ import annotations

import math
from typing import NamedTuple

MAX_BUCKETS = 5
MIN_SUBWINDOW = 5


class AdwinResult(NamedTuple):
    drift: bool
    width: int


class AdwinDetector:
    def __init__(self, delta: float = 0.002, clock: int = 32, max_buckets: int = MAX_BUCKETS):
        if not 0 < delta < 1:
            raise ValueError("delta must be in (0, 1)")
        self.delta = delta
        self.clock = clock
        self.max_buckets = max_buckets
        self.rows: list[list[list[float]]] = []  # each bucket: [sum, variance]
        self.width = 0
        self.total = 0.0
        self.variance = 0.0
        self.ticks = 0
        self.n_detections = 0

    @property
    def estimation(self) -> float:
        return self.total / self.width if self.width else 0.0

    def __len__(self):
        return self.width

    def update(self, x: float) -> AdwinResult:
        if not math.isfinite(x):
            raise ValueError("ADWIN input must be finite")
        self._insert(x)
        self.ticks += 1
        drift = False
        if self.ticks % self.clock == 0 and self.width > 2 * MIN_SUBWINDOW:
            while self._cut_once():
                drift = True
        if drift:
            self.n_detections += 1
        return AdwinResult(drift, self.width)

    # -- histogram maintenance --------------------------------------------
    def _insert(self, x: float):
        if self.width:
            mean = self.total / self.width
            self.variance += self.width * (x - mean) ** 2 / (self.width + 1)
        self.width += 1
        self.total += x
        if not self.rows:
            self.rows.append([])
        self.rows[0].append([x, 0.0])
        self._compress()

    def _compress(self):
        i = 0
        while i < len(self.rows) and len(self.rows[i]) > self.max_buckets:
            size = 1 << i
            (s1, v1), (s2, v2) = self.rows[i][0], self.rows[i][1]
            del self.rows[i][:2]
            mu1, mu2 = s1 / size, s2 / size
            merged = [s1 + s2, v1 + v2 + size * size * (mu1 - mu2) ** 2 / (2 * size)]
            if i + 1 == len(self.rows):
                self.rows.append([])
            self.rows[i + 1].append(merged)
            i += 1

    def _drop_oldest(self):
        i = len(self.rows) - 1
        while i >= 0 and not self.rows[i]:
            i -= 1
        size = 1 << i
        s, v = self.rows[i].pop(0)
        self.width -= size
        self.total -= s
        if self.width:
            mean_rest = self.total / self.width
            self.variance -= v + size * self.width * (s / size - mean_rest) ** 2 / (size + self.width)
            self.variance = max(self.variance, 0.0)
        else:
            self.variance = 0.0
            self.total = 0.0
        while self.rows and not self.rows[-1]:
            self.rows.pop()

    def buckets_oldest_first(self):
        for i in range(len(self.rows) - 1, -1, -1):
            size = 1 << i
            for s, _ in self.rows[i]:
                yield size, s

    def _cut_once(self) -> bool:
        n = self.width
        if n <= 2 * MIN_SUBWINDOW:
            return False
        v = self.variance / n
        dd = math.log(2.0 * math.log(n) / self.delta)
        n0, u0 = 0, 0.0
        for size, s in self.buckets_oldest_first():
            n0 += size
            u0 += s
            n1 = n - n0
            if n1 < MIN_SUBWINDOW:
                break
            if n0 < MIN_SUBWINDOW:
                continue
            if cut_exceeds(n0, u0, n1, self.total - u0, v, dd):
                self._drop_oldest()
                return True
        return False


def cut_threshold(n0: int, n1: int, v: float, dd: float) -> float:
    m = 1.0 / (n0 - MIN_SUBWINDOW + 1) + 1.0 / (n1 - MIN_SUBWINDOW + 1)
    return math.sqrt(2.0 * m * v * dd) + 2.0 / 3.0 * dd * m


def cut_exceeds(n0, u0, n1, u1, v, dd) -> bool:
    return abs(u0 / n0 - u1 / n1) > cut_threshold(n0, n1, v, dd)


def adwin_update(d: AdwinDetector, x: float) -> AdwinResult:
    return d.update(x)
