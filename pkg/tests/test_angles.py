import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from angles import (PscVector, circular_mean, cyclic_error, psc_decode, psc_encode, psc_loss,
                    wrap_angle, wrap_angles)
from errors import DegenerateMeanError, DegenerateVectorError, InvalidParameterError

angles = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


@given(angles)
def test_wrap_angle_lands_in_canonical_domain(x):
    w = wrap_angle(x)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(x), abs_tol=1e-9)


def test_wrap_angle_edges():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(0.0) == 0.0
    with pytest.raises(InvalidParameterError):
        wrap_angle(float("nan"))


def test_wrap_angles_matches_scalar():
    xs = np.linspace(-20, 20, 101)
    assert np.allclose(wrap_angles(xs), [wrap_angle(x) for x in xs])


# ─────────── psc ───────────
def test_psc_encode_zero_and_pi():
    assert np.allclose(psc_encode(0.0, 3).as_array(), [-0.5, -0.5, 1.0])
    assert np.allclose(psc_encode(math.pi, 3).as_array(), [0.5, 0.5, -1.0])


def test_psc_encode_termwise():
    phi = math.pi / 4
    expected = [math.cos(phi + 2 * i * math.pi / 3) for i in (1, 2, 3)]
    assert np.allclose(psc_encode(phi).as_array(), expected)


def test_psc_encode_needs_three_phases():
    with pytest.raises(InvalidParameterError):
        psc_encode(0.3, 2)


def test_psc_decode_examples():
    assert abs(psc_decode(PscVector.of([-0.5, -0.5, 1.0]))) < 1e-12
    with pytest.raises(DegenerateVectorError):
        psc_decode(PscVector.of([0.0, 0.0, 0.0]))


@pytest.mark.parametrize("m", [3, 4, 8])
def test_psc_round_trip_uniform_angles(m):
    rng = np.random.default_rng(11)
    for phi in rng.uniform(-math.pi, math.pi, size=1000):
        assert cyclic_error(psc_decode(psc_encode(phi, m)), phi) < 1e-9


def test_psc_loss():
    a = PscVector.of([1.0, 0.0, 0.0])
    assert psc_loss(a, a) == 0.0
    assert psc_loss(a, PscVector.of([0.0, 1.0, 0.0])) == pytest.approx(2 / 3)
    assert psc_loss(PscVector.of([1, 1, 1]), PscVector.of([-1, -1, -1])) == pytest.approx(4.0)
    with pytest.raises(InvalidParameterError):
        psc_loss(a, PscVector.of([1, 0, 0, 0]))


# ─────────── cyclic error / mean ───────────
def test_cyclic_error_examples():
    assert cyclic_error(0.7, 0.7) == 0.0
    assert cyclic_error(0.1, 6.2) == pytest.approx(2 * math.pi - 6.1)
    assert cyclic_error(math.pi, -math.pi + 0.01) == pytest.approx(0.01)


@given(angles, angles)
def test_cyclic_error_symmetric_and_bounded(a, b):
    e = cyclic_error(a, b)
    assert 0.0 <= e <= math.pi
    assert e == pytest.approx(cyclic_error(b, a), abs=1e-12)


def test_circular_mean_examples():
    assert circular_mean(0.1, -0.1) == pytest.approx(0.0, abs=1e-12)
    assert cyclic_error(circular_mean(math.pi - 0.1, -math.pi + 0.1), math.pi) < 1e-12
    assert circular_mean(0.0, math.pi / 2) == pytest.approx(math.pi / 4)
    with pytest.raises(DegenerateMeanError):
        circular_mean(0.0, math.pi)


@given(angles, st.floats(min_value=-3.0, max_value=3.0))
def test_circular_mean_halves_the_gap(a, delta):
    b = a + delta
    m = circular_mean(a, b)
    assert cyclic_error(m, circular_mean(b, a)) < 1e-9
    half = cyclic_error(a, b) / 2
    assert cyclic_error(m, a) == pytest.approx(half, abs=1e-9)
    assert cyclic_error(m, b) == pytest.approx(half, abs=1e-9)


@given(st.integers(3, 8).flatmap(lambda m: st.tuples(st.lists(st.integers(-100, 100), min_size=m, max_size=m),
                                                     st.lists(st.integers(-100, 100), min_size=m, max_size=m))))
def test_psc_loss_vanishes_only_on_equal_vectors(pair):
    a, b = (PscVector.of([v / 100 for v in xs]) for xs in pair)
    loss = psc_loss(a, b)
    assert loss >= 0.0
    assert (loss == 0.0) == (a == b)
    assert psc_loss(a, a) == 0.0
