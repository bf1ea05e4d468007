"""Sorted, disjoint time-interval lists.

An interval list is a list of ``(t_s, t_f)`` tuples with ``t_s <= t_f``,
sorted by start time and pairwise disjoint. ``t_f`` may be ``math.inf`` for
an interval that never ends; at most the final interval can be open-ended.
Intervals are closed: touching intervals ``[1, 2]`` and ``[2, 3]`` merge.
"""

from __future__ import annotations

import math

Interval = tuple[float, float]


def merge_intervals(intervals: list[Interval]) -> list[Interval]:
    """Merge an arbitrary interval list into sorted, disjoint form."""
    if not intervals:
        return []
    ordered = sorted(intervals)
    merged = [ordered[0]]
    for s, f in ordered[1:]:
        ms, mf = merged[-1]
        if s <= mf:
            if f > mf:
                merged[-1] = (ms, f)
        else:
            merged.append((s, f))
    return merged


def union_intervals(a: list[Interval], b: list[Interval]) -> list[Interval]:
    """Union of two sorted disjoint lists, again sorted and disjoint."""
    return merge_intervals(list(a) + list(b))


def intervals_contain(intervals: list[Interval], t: float) -> bool:
    """True when time ``t`` falls inside any interval (closed ends)."""
    for s, f in intervals:
        if s > t:
            return False
        if t <= f:
            return True
    return False


def first_overlap(intervals: list[Interval], t0: float, t1: float) -> Interval | None:
    """First interval overlapping the closed window ``[t0, t1]``, or None."""
    for s, f in intervals:
        if s > t1:
            return None
        if f >= t0:
            return (s, f)
    return None


def open_ended_start(intervals: list[Interval]) -> float:
    """Start time of the open-ended interval, or ``inf`` when all end."""
    if intervals and math.isinf(intervals[-1][1]):
        return intervals[-1][0]
    return math.inf
