"""Minimum-cost linear assignment via shortest augmenting paths.

A direct O(n * m^2) implementation with row/column potentials. Written
in-tree (rather than delegating to an external solver) so tie-breaking is
pinned: rows are processed in increasing index order and ties in the
column search resolve toward the lowest column index, which keeps every
downstream pipeline byte-reproducible.
"""

from __future__ import annotations

import numpy as np

from .model import BoundingBox, iou_matrix

__all__ = ["solve_assignment", "match_boxes_max_iou"]

# Gated matching: infeasible pairs get a cost so large that minimizing total
# cost first maximizes the number of feasible matches.
_BIG_COST = 1.0e6


def _solve_rect(cost: np.ndarray) -> np.ndarray:
    """Assign every row of an m x n cost matrix (m <= n); returns col_to_row."""
    m, n = cost.shape
    u = np.zeros(m)
    v = np.zeros(n + 1)
    # col_to_row[j] = row matched to column j; column n is the virtual start.
    col_to_row = np.full(n + 1, -1, dtype=np.int64)
    for row in range(m):
        col_to_row[n] = row
        j0 = n
        min_reduced = np.full(n, np.inf)
        previous = np.full(n, n, dtype=np.int64)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            current_row = col_to_row[j0]
            free = np.nonzero(~used[:n])[0]
            reduced = cost[current_row, free] - u[current_row] - v[free]
            better = reduced < min_reduced[free]
            min_reduced[free[better]] = reduced[better]
            previous[free[better]] = j0
            pick = int(np.argmin(min_reduced[free]))  # first minimum: lowest column wins ties
            j1 = int(free[pick])
            delta = min_reduced[j1]
            used_cols = np.nonzero(used)[0]
            u[col_to_row[used_cols]] += delta
            v[used_cols] -= delta
            min_reduced[~used[:n]] -= delta
            j0 = j1
            if col_to_row[j0] == -1:
                break
        while j0 != n:
            j1 = int(previous[j0])
            col_to_row[j0] = col_to_row[j1]
            j0 = j1
    return col_to_row[:n]


def solve_assignment(cost) -> list[tuple[int, int]]:
    """Minimum-total-cost matching of cardinality min(m, n) on a finite cost matrix.

    Returns (row, col) pairs sorted by row. Deterministic, including on
    ties: rows are assigned in increasing order and equal-cost columns
    resolve toward the lowest index.
    """
    matrix = np.asarray(cost, dtype=float)
    if matrix.ndim != 2:
        raise ValueError(f"cost must be a 2-D matrix, got shape {matrix.shape}")
    m, n = matrix.shape
    if m == 0 or n == 0:
        return []
    if not np.all(np.isfinite(matrix)):
        raise ValueError("cost matrix entries must be finite")
    transposed = m > n
    if transposed:
        matrix = matrix.T
        m, n = matrix.shape
    col_to_row = _solve_rect(matrix)
    pairs = [(int(col_to_row[j]), j) for j in range(n) if col_to_row[j] >= 0]
    if transposed:
        pairs = [(j, i) for i, j in pairs]
    return sorted(pairs)


def match_boxes_max_iou(
    a: list[BoundingBox], b: list[BoundingBox], gate: float
) -> list[tuple[int, int]]:
    """Gated matching between two box lists maximizing matches, then total IOU.

    Pairs below the IOU gate are infeasible. Among all matchings with the
    maximum number of feasible pairs, the one with the highest total IOU
    is returned, as index pairs into (a, b) sorted by a-index.
    """
    if not a or not b:
        return []
    ious = iou_matrix(a, b)
    cost = np.where(ious >= gate, 1.0 - ious, _BIG_COST)
    pairs = solve_assignment(cost)
    return [(i, j) for i, j in pairs if ious[i, j] >= gate]
