# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the edit-distance and W1 loops."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef long _lev(const long[:] a, const long[:] b, long* buf) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    cdef long *prev = buf
    cdef long *cur = buf + (m + 1)
    cdef long *tmp
    cdef long best, c
    if n == 0 or m == 0:
        return n + m
    for j in range(m + 1):
        prev[j] = j
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            c = prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 1)
            best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            if c < best:
                best = c
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return prev[m]


def _as_long(seq):
    return np.ascontiguousarray(seq, dtype=np.int_)


def levenshtein(a, b):
    cdef const long[:] x = _as_long(a)
    cdef const long[:] y = _as_long(b)
    cdef long *buf = <long*> malloc(2 * (y.shape[0] + 1) * sizeof(long))
    try:
        return _lev(x, y, buf)
    finally:
        free(buf)


def distance_matrix(rows, cols):
    rows = [_as_long(r) for r in rows]
    cols = [_as_long(c) for c in cols]
    cdef Py_ssize_t nr = len(rows), nc = len(cols), i, j, longest = 1
    out = np.zeros((nr, nc), dtype=np.float64)
    cdef double[:, :] o = out
    cdef const long[:] a
    cdef const long[:] b
    for c in cols:
        longest = max(longest, c.shape[0])
    cdef long *buf = <long*> malloc(2 * (longest + 1) * sizeof(long))
    cdef Py_ssize_t la, lb, top
    try:
        for i in range(nr):
            a = rows[i]
            la = a.shape[0]
            for j in range(nc):
                b = cols[j]
                lb = b.shape[0]
                top = la if la > lb else lb
                if top:
                    o[i, j] = _lev(a, b, buf) / <double> top
    finally:
        free(buf)
    return out


def w1_sorted(a, b):
    cdef const double[:] x = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:] y = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], i = 0, j = 0
    cdef double total = 0.0, pos, nxt, d
    pos = x[0] if x[0] < y[0] else y[0]
    while i < n or j < m:
        if j >= m or (i < n and x[i] <= y[j]):
            nxt = x[i]
        else:
            nxt = y[j]
        d = <double> i / n - <double> j / m
        total += (d if d >= 0 else -d) * (nxt - pos)
        pos = nxt
        while i < n and x[i] == pos:
            i += 1
        while j < m and y[j] == pos:
            j += 1
    return total
