# angles.py
"""
Cyclic-angle arithmetic and the phase-shifting coder (PSC).

Canonical angle domain is (-pi, pi] in radians everywhere in this project.
A PSC vector encodes an angle as m cosines with equally spaced phase offsets,
which turns the 2*pi wrap-around into a smooth target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from errors import DegenerateMeanError, DegenerateVectorError, InvalidParameterError

# Angles are plain floats in (-pi, pi]; the alias documents intent.
CyclicAngle = float

TWO_PI = 2.0 * math.pi
_EPS = 1e-12


def wrap_angle(x: float) -> CyclicAngle:
    """Normalize any real angle into (-pi, pi]."""
    if not math.isfinite(x):
        raise InvalidParameterError(f"angle must be finite, got {x!r}")
    return math.pi - ((math.pi - float(x)) % TWO_PI)


def wrap_angles(x: np.ndarray) -> np.ndarray:
    """Vectorized wrap_angle."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)


# ─────────────────── distances / means ───────────────────
def cyclic_error(a: CyclicAngle, b: CyclicAngle) -> float:
    """Folded angular distance in [0, pi]."""
    d = abs(wrap_angle(a) - wrap_angle(b))
    return d if d <= math.pi else TWO_PI - d


def circular_mean(a: CyclicAngle, b: CyclicAngle) -> CyclicAngle:
    """
    Midpoint of a and b on the shorter arc.
    Antipodal pairs have no unique midpoint and raise DegenerateMeanError.
    """
    if cyclic_error(a, b) >= math.pi - _EPS:
        raise DegenerateMeanError(f"antipodal angles {a!r} and {b!r} have no mean")
    s = math.sin(a) + math.sin(b)
    c = math.cos(a) + math.cos(b)
    if math.hypot(s, c) < _EPS:
        raise DegenerateMeanError(f"antipodal angles {a!r} and {b!r} have no mean")
    return wrap_angle(math.atan2(s, c))


# ─────────────────── phase-shifting coder ───────────────────
@dataclass(frozen=True)
class PscVector:
    components: Tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.components)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)

    @classmethod
    def of(cls, values: Sequence[float]) -> "PscVector":
        return cls(tuple(float(v) for v in values))


def _phase_offsets(m: int) -> np.ndarray:
    # offsets 2*i*pi/m for i = 1..m
    return TWO_PI * np.arange(1, m + 1) / m


def _check_m(m: int) -> None:
    if int(m) != m or m < 3:
        raise InvalidParameterError(f"PSC needs m >= 3 phases, got {m!r}")


def psc_encode(angle: CyclicAngle, m: int = 3) -> PscVector:
    _check_m(m)
    return PscVector.of(np.cos(angle + _phase_offsets(m)))


def psc_decode(vec: PscVector) -> CyclicAngle:
    _check_m(vec.m)
    beta = _phase_offsets(vec.m)
    x = vec.as_array()
    num = float(np.sum(x * np.sin(beta)))
    den = float(np.sum(x * np.cos(beta)))
    if abs(num) < _EPS and abs(den) < _EPS:
        raise DegenerateVectorError("PSC vector has no defined phase")
    return wrap_angle(-math.atan2(num, den))


def psc_loss(predicted: PscVector, target: PscVector) -> float:
    """Mean squared difference between two PSC vectors of equal length."""
    if predicted.m != target.m:
        raise InvalidParameterError(f"PSC length mismatch: {predicted.m} vs {target.m}")
    diff = predicted.as_array() - target.as_array()
    return float(np.mean(diff * diff))
