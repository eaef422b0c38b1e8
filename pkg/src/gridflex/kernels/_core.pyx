# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled minute-scan kernels; semantics identical to kernels/pure.py."""

import numpy as np

BACKEND = "cython"


def overload_runs(double[:] load, double capacity, Py_ssize_t lo, Py_ssize_t hi):
    cdef list starts = []
    cdef list ends = []
    cdef Py_ssize_t i = lo
    cdef Py_ssize_t run_start
    while i < hi:
        if load[i] > capacity:
            run_start = i
            while i < hi and load[i] > capacity:
                i += 1
            starts.append(run_start)
            ends.append(i)
        else:
            i += 1
    return np.asarray(starts, dtype=np.int64), np.asarray(ends, dtype=np.int64)


def latest_free_run(
    double[:] load,
    double[:] sched,
    double power,
    double capacity,
    Py_ssize_t lo,
    Py_ssize_t hi,
    Py_ssize_t length,
):
    cdef Py_ssize_t start, m
    cdef bint fits
    if length <= 0 or hi - lo < length:
        return -1
    # backward scan: first fit found is the latest
    start = hi - length
    while start >= lo:
        fits = True
        m = start + length - 1
        while m >= start:
            if sched[m] != 0.0 or load[m] + power > capacity:
                fits = False
                break
            m -= 1
        if fits:
            return start
        # jump past the blocking minute
        start = m - length
    return -1


def free_minutes_desc(
    double[:] load,
    double[:] sched,
    double power,
    double capacity,
    Py_ssize_t lo,
    Py_ssize_t hi,
    Py_ssize_t limit,
):
    cdef list found = []
    cdef Py_ssize_t m = hi - 1
    if limit <= 0 or hi <= lo:
        return np.empty(0, dtype=np.int64)
    while m >= lo and len(found) < limit:
        if sched[m] == 0.0 and load[m] + power <= capacity:
            found.append(m)
        m -= 1
    return np.asarray(found, dtype=np.int64)
