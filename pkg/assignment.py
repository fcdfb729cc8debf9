# assignment.py
# Optimal bipartite matching of boxes across the two frames of a sample.
from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from errors import InvalidParameterError

log = logging.getLogger(__name__)

DEFAULT_IOU_MIN = 0.05

MatchList = List[Tuple[int, int]]

_TIE_TOL = 1e-12


def _best_total(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(m, maximize=True)
    return float(m[rows, cols].sum())


def hungarian_match(m: np.ndarray, iou_min: float = DEFAULT_IOU_MIN) -> MatchList:
    """
    Maximum-total-IoU matching; pairs with IoU <= iou_min are dropped afterwards.

    Rectangular matrices are fine (scipy pads internally). Among equal-value optima
    the lexicographically smallest pair list is returned: rows are fixed in order,
    each to the smallest column that still admits an optimal completion.
    """
    if not 0.0 <= iou_min < 1.0:
        raise InvalidParameterError(f"iou_min must be in [0, 1), got {iou_min}")
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise InvalidParameterError(f"IoU matrix must be 2-D, got shape {m.shape}")
    n_rows, n_cols = m.shape
    if n_rows == 0 or n_cols == 0 or not np.any(m > 0.0):
        return []

    target = _best_total(m)
    tol = _TIE_TOL * max(1.0, target)
    free_cols: List[int] = list(range(n_cols))
    pairs: MatchList = []
    acc = 0.0
    for i in range(n_rows):
        rest_rows = np.arange(i + 1, n_rows)
        for j in free_cols:
            if m[i, j] <= 0.0:
                continue
            rest_cols = np.array([c for c in free_cols if c != j], dtype=int)
            value = acc + m[i, j] + _best_total(m[np.ix_(rest_rows, rest_cols)])
            if value >= target - tol:
                pairs.append((i, j))
                acc += m[i, j]
                free_cols.remove(j)
                break

    kept = [(i, j) for i, j in pairs if m[i, j] > iou_min]
    if len(kept) < len(pairs):
        log.debug("dropped %d matches at or below iou_min=%.3f", len(pairs) - len(kept), iou_min)
    return kept


def total_iou(m: np.ndarray, pairs: Sequence[Tuple[int, int]]) -> float:
    m = np.asarray(m, dtype=float)
    return float(sum(m[i, j] for i, j in pairs))
