"""Pure-numpy implementations of the minute-scan kernels.

These are the reference semantics; the compiled backend in ``_core.pyx``
must return bit-identical results (all outputs are indices, no float
arithmetic beyond comparisons).
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def overload_runs(load: np.ndarray, capacity: float, lo: int, hi: int):
    """Maximal runs of minutes in [lo, hi) where load > capacity.

    Returns (starts, ends) as int64 arrays, half-open, sorted by start.
    """
    seg = load[lo:hi] > capacity
    if not seg.any():
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    padded = np.concatenate(([False], seg, [False]))
    d = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(d == 1).astype(np.int64) + lo
    ends = np.flatnonzero(d == -1).astype(np.int64) + lo
    return starts, ends


def latest_free_run(
    load: np.ndarray,
    sched: np.ndarray,
    power: float,
    capacity: float,
    lo: int,
    hi: int,
    length: int,
) -> int:
    """Latest start in [lo, hi-length] of a run of `length` placeable minutes.

    A minute is placeable when the EV is idle there (sched == 0) and adding
    `power` keeps the load within capacity. Returns -1 when no run fits.
    """
    if length <= 0 or hi - lo < length:
        return -1
    ok = (load[lo:hi] + power <= capacity) & (sched[lo:hi] == 0.0)
    if length == 1:
        idx = np.flatnonzero(ok)
        return -1 if len(idx) == 0 else lo + int(idx[-1])
    counts = np.cumsum(np.concatenate(([0], ok.astype(np.int64))))
    window = counts[length:] - counts[:-length]
    idx = np.flatnonzero(window == length)
    return -1 if len(idx) == 0 else lo + int(idx[-1])


def free_minutes_desc(
    load: np.ndarray,
    sched: np.ndarray,
    power: float,
    capacity: float,
    lo: int,
    hi: int,
    limit: int,
) -> np.ndarray:
    """Up to `limit` placeable minutes in [lo, hi), latest first (int64)."""
    if limit <= 0 or hi <= lo:
        return np.empty(0, dtype=np.int64)
    ok = (load[lo:hi] + power <= capacity) & (sched[lo:hi] == 0.0)
    idx = np.flatnonzero(ok).astype(np.int64) + lo
    return idx[::-1][:limit].copy()
