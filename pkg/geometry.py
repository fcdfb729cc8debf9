# geometry.py
# Axis-aligned box primitives: centroid, IoU, pairwise IoU matrix, stationary mask.
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from errors import InvalidParameterError

NON_MOTOR_VEHICLE = 0
DEFAULT_IOU_MAX = 0.98

# rows = boxes of the first frame, cols = boxes of the second frame
IoUMatrix = np.ndarray


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float = 1.0
    class_tag: int = NON_MOTOR_VEHICLE

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidParameterError(
                f"box needs positive area: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidParameterError(f"confidence outside [0, 1]: {self.confidence}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_xyxy(self) -> Tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


def centroid(b: BoundingBox) -> Tuple[float, float]:
    return ((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    inter = w * h
    return inter / (a.area + b.area - inter)


def _as_xyxy_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4), dtype=float)
    return np.array([b.as_xyxy() for b in boxes], dtype=float)


def iou_matrix(set1: Sequence[BoundingBox], set2: Sequence[BoundingBox]) -> IoUMatrix:
    """
    Pairwise IoU, shape (len(set1), len(set2)). Either side may be empty.
    """
    b1 = _as_xyxy_array(set1)[:, None, :]
    b2 = _as_xyxy_array(set2)[None, :, :]
    w = np.clip(np.minimum(b1[..., 2], b2[..., 2]) - np.maximum(b1[..., 0], b2[..., 0]), 0.0, None)
    h = np.clip(np.minimum(b1[..., 3], b2[..., 3]) - np.maximum(b1[..., 1], b2[..., 1]), 0.0, None)
    inter = w * h
    area1 = (b1[..., 2] - b1[..., 0]) * (b1[..., 3] - b1[..., 1])
    area2 = (b2[..., 2] - b2[..., 0]) * (b2[..., 3] - b2[..., 1])
    out = inter / (area1 + area2 - inter)
    return out.reshape(len(set1), len(set2))


def mask_stationary(m: IoUMatrix, iou_max: float = DEFAULT_IOU_MAX) -> IoUMatrix:
    """Zero every entry >= iou_max (near-perfect overlap means the object did not move)."""
    if not 0.0 < iou_max <= 1.0:
        raise InvalidParameterError(f"iou_max must be in (0, 1], got {iou_max}")
    m = np.asarray(m, dtype=float)
    return np.where(m < iou_max, m, 0.0)
