"""Reference implementations of the hot loops (used when the extension is absent)."""
from __future__ import annotations

import numpy as np


def levenshtein(a, b) -> int:
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return n + m
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[m]


def distance_matrix(rows, cols) -> np.ndarray:
    """Normalised edit distance between every pair (0 for two empty traces)."""
    out = np.zeros((len(rows), len(cols)), dtype=np.float64)
    for i, a in enumerate(rows):
        for j, b in enumerate(cols):
            longest = max(len(a), len(b))
            if longest:
                out[i, j] = levenshtein(a, b) / longest
    return out


def w1_sorted(a, b) -> float:
    """W1 between two empirical distributions given as sorted samples."""
    n, m = len(a), len(b)
    i = j = 0
    total = 0.0
    x = min(a[0], b[0])
    while i < n or j < m:
        if j >= m or (i < n and a[i] <= b[j]):
            nxt = a[i]
        else:
            nxt = b[j]
        total += abs(i / n - j / m) * (nxt - x)
        x = nxt
        while i < n and a[i] == x:
            i += 1
        while j < m and b[j] == x:
            j += 1
    return float(total)
