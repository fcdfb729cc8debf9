import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from errors import InvalidParameterError
from geometry import BoundingBox, centroid, iou, iou_matrix, mask_stationary


@st.composite
def boxes(draw):
    x = draw(st.floats(min_value=-500, max_value=500))
    y = draw(st.floats(min_value=-500, max_value=500))
    w = draw(st.floats(min_value=0.5, max_value=80))
    h = draw(st.floats(min_value=0.5, max_value=80))
    return BoundingBox(x, y, x + w, y + h)


def test_centroid():
    assert centroid(BoundingBox(0, 0, 2, 2)) == (1, 1)
    assert centroid(BoundingBox(10, 20, 30, 60)) == (20, 40)
    assert centroid(BoundingBox(0, 0, 1, 1)) == (0.5, 0.5)


def test_box_rejects_empty_area_and_bad_confidence():
    with pytest.raises(InvalidParameterError):
        BoundingBox(0, 0, 0, 1)
    with pytest.raises(InvalidParameterError):
        BoundingBox(0, 0, 1, 1, confidence=1.5)


def test_iou_examples():
    a = BoundingBox(0, 0, 2, 2)
    assert iou(a, a) == 1.0
    assert iou(a, BoundingBox(5, 5, 6, 6)) == 0.0
    assert iou(a, BoundingBox(1, 0, 3, 2)) == pytest.approx(1 / 3)
    # touching edges share no area
    assert iou(a, BoundingBox(2, 0, 4, 2)) == 0.0


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(iou(b, a))


def test_iou_matrix_shapes():
    a = BoundingBox(0, 0, 2, 2)
    assert iou_matrix([], [a, a]).shape == (0, 2)
    assert iou_matrix([a], []).shape == (1, 0)
    assert iou_matrix([a], [a]).tolist() == [[1.0]]


@given(st.lists(boxes(), max_size=5), st.lists(boxes(), max_size=5))
def test_iou_matrix_matches_elementwise(set1, set2):
    m = iou_matrix(set1, set2)
    assert m.shape == (len(set1), len(set2))
    for i, a in enumerate(set1):
        for j, b in enumerate(set2):
            assert m[i, j] == pytest.approx(iou(a, b), abs=1e-12)


def test_mask_stationary():
    assert mask_stationary(np.array([[0.99]]), 0.98).tolist() == [[0.0]]
    assert mask_stationary(np.array([[0.5]]), 0.98).tolist() == [[0.5]]
    m = np.array([[0.1, 0.2], [0.3, 0.97]])
    assert np.array_equal(mask_stationary(m), m)
    # boundary value counts as stationary
    assert mask_stationary(np.array([[0.98]])).tolist() == [[0.0]]
    with pytest.raises(InvalidParameterError):
        mask_stationary(m, 0.0)


def shift(b, dx, dy):
    return BoundingBox(b.x_min + dx, b.y_min + dy, b.x_max + dx, b.y_max + dy)


@given(boxes(), boxes(), st.integers(-300, 300), st.integers(-300, 300))
def test_iou_ignores_common_translation(a, b, dx, dy):
    assert iou(shift(a, dx, dy), shift(b, dx, dy)) == pytest.approx(iou(a, b), abs=1e-9)


@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=12),
       st.floats(min_value=0.01, max_value=1.0))
def test_mask_stationary_is_idempotent_and_never_raises_an_entry(values, iou_max):
    m = np.array(values).reshape(1, -1)
    once = mask_stationary(m, iou_max)
    assert np.array_equal(mask_stationary(once, iou_max), once)
    assert (once <= m).all()
