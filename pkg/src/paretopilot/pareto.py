"""Nondominated sorting and 2-D dominated hypervolume under joint maximization.

Dominance: a dominates b when a >= b in both objectives and > in at least one.
Hypervolume is the area jointly dominated relative to a reference point;
points at or below the reference in either coordinate are clipped so they
contribute zero area instead of being rejected.
"""
from __future__ import annotations

import numpy as np


def nondominated(points) -> list[int]:
    """Indices of the maximal elements, ascending. Exact duplicates are all
    retained (neither strictly improves on the other)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts)
    if n == 0:
        return []
    if not np.all(np.isfinite(pts)):
        raise ValueError("objective points must be finite")
    # sweep groups of equal f1 in descending f1 order; a point survives iff it
    # holds the group's max f2 and beats every strictly-greater-f1 point's f2
    order = np.lexsort((-pts[:, 1], -pts[:, 0]))
    f1s, f2s = pts[order, 0], pts[order, 1]
    keep = np.zeros(n, dtype=bool)
    best_f2_strict = -np.inf
    i = 0
    while i < n:
        j = i
        while j < n and f1s[j] == f1s[i]:
            j += 1
        g_max = f2s[i]
        if g_max > best_f2_strict:
            for k in range(i, j):
                if f2s[k] != g_max:
                    break
                keep[order[k]] = True
        best_f2_strict = max(best_f2_strict, g_max)
        i = j
    return [int(i) for i in np.flatnonzero(keep)]


def clip_to_ref(points, ref) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.maximum(pts, np.asarray(ref, dtype=float))


def hypervolume_2d(points, ref) -> float:
    """Area of the union of rectangles [ref, p] over the point set."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return 0.0
    ref = np.asarray(ref, dtype=float)
    pts = clip_to_ref(pts, ref)
    front = pts[nondominated(pts)]
    # sort by f1 descending; f2 then ascends along the sweep
    order = np.lexsort((front[:, 1], -front[:, 0]))
    front = front[order]
    hv = 0.0
    prev_f2 = ref[1]
    for f1, f2 in front:
        if f2 > prev_f2:
            hv += (f1 - ref[0]) * (f2 - prev_f2)
            prev_f2 = f2
    return float(hv)


def pareto_front(points, ref) -> tuple[np.ndarray, list[int]]:
    """Nondominated points sorted ascending by f1 (descending f2), with their
    original indices."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    idx = nondominated(pts)
    front = pts[idx]
    order = np.lexsort((-front[:, 1], front[:, 0]))
    return front[order], [idx[i] for i in order]


def greedy_hv_subset(points, ref, q: int) -> list[int]:
    """Pick up to q indices by repeatedly adding the point with the largest
    marginal hypervolume gain; ties go to the lowest index."""
    if q < 1:
        raise ValueError("q must be >= 1")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts)
    selected: list[int] = []
    selected_pts: list[np.ndarray] = []
    current_hv = 0.0
    remaining = list(range(n))
    # gains within this tolerance count as tied (absorbs float noise between
    # equally-placed points), and ties resolve to the lowest index
    tie_eps = 1e-12
    while remaining and len(selected) < q:
        best_i, best_gain = None, -1.0
        for i in remaining:
            gain = hypervolume_2d(selected_pts + [pts[i]], ref) - current_hv
            if gain > best_gain + tie_eps:
                best_i, best_gain = i, gain
        selected.append(best_i)
        selected_pts.append(pts[best_i])
        remaining.remove(best_i)
        current_hv += max(best_gain, 0.0)
    return selected
