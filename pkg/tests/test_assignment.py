import itertools

import numpy as np
import pytest

from assignment import hungarian_match, total_iou
from errors import InvalidParameterError


def brute_force_best(m: np.ndarray) -> float:
    n_rows, n_cols = m.shape
    if n_rows == 0 or n_cols == 0:
        return 0.0
    best = 0.0
    if n_rows <= n_cols:
        for cols in itertools.permutations(range(n_cols), n_rows):
            best = max(best, sum(m[i, c] for i, c in enumerate(cols)))
    else:
        for rows in itertools.permutations(range(n_rows), n_cols):
            best = max(best, sum(m[r, j] for j, r in enumerate(rows)))
    return best


def test_examples():
    assert hungarian_match(np.array([[1.0]]), 0.05) == [(0, 0)]
    assert hungarian_match(np.array([[0.9, 0.1], [0.2, 0.8]])) == [(0, 0), (1, 1)]
    assert hungarian_match(np.array([[0.04]]), 0.05) == []


def test_empty_and_all_zero():
    assert hungarian_match(np.zeros((0, 3))) == []
    assert hungarian_match(np.zeros((2, 0))) == []
    assert hungarian_match(np.zeros((2, 2))) == []


def test_rows_and_columns_used_once():
    m = np.array([[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]])
    pairs = hungarian_match(m)
    assert len({i for i, _ in pairs}) == len(pairs) == len({j for _, j in pairs}) == 2


def test_ties_resolve_to_lexicographically_smallest_pairs():
    m = np.full((2, 2), 0.5)
    assert hungarian_match(m) == [(0, 0), (1, 1)]
    m = np.array([[0.3, 0.3, 0.0], [0.3, 0.3, 0.0]])
    assert hungarian_match(m) == [(0, 0), (1, 1)]


def test_floor_applied_after_optimisation():
    # the optimum pairs (0,1) and (1,0); (1,0) falls under the floor and is dropped
    m = np.array([[0.5, 0.6], [0.04, 0.0]])
    assert hungarian_match(m, 0.05) == [(0, 1)]


def test_rectangular():
    m = np.array([[0.1], [0.7], [0.3]])
    assert hungarian_match(m) == [(1, 0)]


def test_invalid_arguments():
    with pytest.raises(InvalidParameterError):
        hungarian_match(np.zeros((2, 2)), 1.0)
    with pytest.raises(InvalidParameterError):
        hungarian_match(np.zeros(3))


def test_matches_exhaustive_search_on_random_matrices():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n_rows, n_cols = rng.integers(1, 7, size=2)
        m = rng.random((n_rows, n_cols))
        m[rng.random(m.shape) < 0.3] = 0.0
        # quantised values produce plenty of ties
        if rng.random() < 0.5:
            m = np.round(m, 1)
        pairs = hungarian_match(m, 0.0)
        assert total_iou(m, pairs) == pytest.approx(brute_force_best(m), abs=1e-12)
        assert len({i for i, _ in pairs}) == len(pairs) == len({j for _, j in pairs})
