# detector.py — two-frame wrong-way cycling detector
"""
Per-sample pipeline on one frame pair:

  IoU matrix -> stationary mask -> Hungarian matching -> for each match:
  motion orientation (centroid displacement) + appearance orientation (oracle),
  And-strategy validation, directional classification -> (d_r, d_w).

A sample stream becomes two aligned count series; a rider visible in several
consecutive samples is counted in each of them (the estimator deflates later).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

from angles import CyclicAngle, circular_mean, cyclic_error, wrap_angle
from arma import CountSeries, Direction
from assignment import DEFAULT_IOU_MIN, hungarian_match
from errors import (DegenerateMeanError, InvalidParameterError, MalformedStreamError,
                    NoMotionError)
from geometry import DEFAULT_IOU_MAX, BoundingBox, centroid, iou_matrix, mask_stationary

log = logging.getLogger(__name__)

DIV_MAX = 2.0 * math.pi / 3.0
CLASS_THRESHOLD = 2.0 * math.pi / 3.0
DEFAULT_T_GAP = 2.0
DEFAULT_INTRA_PAIR_DT = 0.2


@dataclass(frozen=True)
class DetectorConfig:
    iou_max: float = DEFAULT_IOU_MAX
    iou_min: float = DEFAULT_IOU_MIN
    div_max: float = DIV_MAX
    class_threshold: float = CLASS_THRESHOLD
    o_right: float = 0.0
    # image y grows downwards (CCTV convention); o_right lives in the same frame
    y_axis_down: bool = True
    use_ensemble: bool = True


# ---------- Types ----------
@dataclass(frozen=True)
class FramePairObservation:
    sample_index: int
    t_k: float
    intra_pair_dt: float
    detections_1: Tuple[BoundingBox, ...] = ()
    detections_2: Tuple[BoundingBox, ...] = ()
    # ground-truth vehicle id per detection (None = clutter); empty for real footage
    vehicle_ids_1: Tuple[Optional[int], ...] = ()
    vehicle_ids_2: Tuple[Optional[int], ...] = ()
    # appearance heading per detection, when the source recorded one
    appearance_1: Tuple[Optional[float], ...] = ()
    appearance_2: Tuple[Optional[float], ...] = ()

    def __post_init__(self):
        if self.sample_index < 0:
            raise InvalidParameterError(f"negative sample index {self.sample_index}")
        if not self.intra_pair_dt > 0.0:
            raise InvalidParameterError(f"intra_pair_dt must be > 0, got {self.intra_pair_dt}")
        for name, extra, boxes in (("vehicle_ids_1", self.vehicle_ids_1, self.detections_1),
                                   ("vehicle_ids_2", self.vehicle_ids_2, self.detections_2),
                                   ("appearance_1", self.appearance_1, self.detections_1),
                                   ("appearance_2", self.appearance_2, self.detections_2)):
            if extra and len(extra) != len(boxes):
                raise InvalidParameterError(
                    f"sample {self.sample_index}: {name} has {len(extra)} entries for {len(boxes)} boxes")

    def frame_time(self, slot: int) -> float:
        """Timestamp of frame 1 or 2 of the pair; also the frame id handed to oracles."""
        return self.t_k if slot == 1 else self.t_k + self.intra_pair_dt


@dataclass(frozen=True)
class OrientedInstance:
    sample_index: int
    o_det: CyclicAngle
    o_model: Optional[CyclicAngle]
    o_final: CyclicAngle
    direction: Direction
    match: Tuple[int, int] = (-1, -1)


@dataclass(frozen=True)
class PairCounts:
    sample_index: int
    d_r: int = 0
    d_w: int = 0
    matched: int = 0


class OrientationOracle(Protocol):
    """Appearance-based heading estimate for one box in one frame."""

    def orientation(self, frame_time: float, box: BoundingBox) -> CyclicAngle:
        ...


class RecordedOracle:
    """
    Replays appearance headings stored alongside the detections of a stream.
    Lookups are keyed on (frame time, box coordinates); unknown boxes raise MalformedStreamError.
    """

    def __init__(self):
        self._table: Dict[Tuple[float, Tuple[float, float, float, float]], CyclicAngle] = {}

    @classmethod
    def from_observations(cls, stream: Iterable[FramePairObservation]) -> "RecordedOracle":
        oracle = cls()
        for obs in stream:
            for slot, boxes, angles in ((1, obs.detections_1, obs.appearance_1),
                                        (2, obs.detections_2, obs.appearance_2)):
                for box, angle in zip(boxes, angles):
                    if angle is not None:
                        oracle.record(obs.frame_time(slot), box, angle)
        return oracle

    def record(self, frame_time: float, box: BoundingBox, angle: CyclicAngle) -> None:
        self._table[(frame_time, box.as_xyxy())] = wrap_angle(angle)

    def __len__(self) -> int:
        return len(self._table)

    def orientation(self, frame_time: float, box: BoundingBox) -> CyclicAngle:
        try:
            return self._table[(frame_time, box.as_xyxy())]
        except KeyError:
            raise MalformedStreamError(f"no recorded appearance for box {box.as_xyxy()} at t={frame_time}") from None


# ---------- Orientation ----------
def motion_orientation(b1: BoundingBox, b2: BoundingBox, y_axis_down: bool = True) -> CyclicAngle:
    (x1, y1), (x2, y2) = centroid(b1), centroid(b2)
    dx, dy = x2 - x1, y2 - y1
    if dx == 0.0 and dy == 0.0:
        raise NoMotionError("matched boxes share a centroid")
    return wrap_angle(math.atan2(dy if y_axis_down else -dy, dx))


def appearance_orientation(
    oracle: OrientationOracle,
    b1: BoundingBox,
    b2: BoundingBox,
    frame_times: Tuple[float, float] = (0.0, 0.0),
) -> CyclicAngle:
    o1 = oracle.orientation(frame_times[0], b1)
    o2 = oracle.orientation(frame_times[1], b2)
    return circular_mean(o1, o2)


def and_strategy(o_det: CyclicAngle, o_model: CyclicAngle, div_max: float = DIV_MAX) -> Optional[CyclicAngle]:
    """Accept only when both estimates agree within div_max; return their mean."""
    if not 0.0 < div_max <= math.pi:
        raise InvalidParameterError(f"div_max must be in (0, pi], got {div_max}")
    if cyclic_error(o_det, o_model) < div_max:
        return circular_mean(o_det, o_model)
    return None


def classify(o_final: CyclicAngle, o_right: CyclicAngle, threshold: float = CLASS_THRESHOLD) -> Direction:
    return Direction.RIGHT_WAY if cyclic_error(o_final, o_right) < threshold else Direction.WRONG_WAY


# ---------- Per sample ----------
def process_pair(
    obs: FramePairObservation,
    oracle: Optional[OrientationOracle],
    cfg: DetectorConfig = DetectorConfig(),
) -> Tuple[PairCounts, List[OrientedInstance]]:
    if cfg.use_ensemble and oracle is None:
        raise InvalidParameterError("ensemble validation needs an orientation oracle")
    m = mask_stationary(iou_matrix(obs.detections_1, obs.detections_2), cfg.iou_max)
    matches = hungarian_match(m, cfg.iou_min)
    times = (obs.frame_time(1), obs.frame_time(2))

    instances: List[OrientedInstance] = []
    for i, j in matches:
        b1, b2 = obs.detections_1[i], obs.detections_2[j]
        try:
            o_det = motion_orientation(b1, b2, cfg.y_axis_down)
        except NoMotionError:
            log.debug("sample %d: match (%d, %d) has no motion", obs.sample_index, i, j)
            continue
        o_model: Optional[float] = None
        if cfg.use_ensemble:
            try:
                o_model = appearance_orientation(oracle, b1, b2, times)
            except DegenerateMeanError:
                log.debug("sample %d: appearance estimates antipodal for (%d, %d)", obs.sample_index, i, j)
                continue
            try:
                o_final = and_strategy(o_det, o_model, cfg.div_max)
            except DegenerateMeanError:
                log.debug("sample %d: motion and appearance antipodal for (%d, %d)", obs.sample_index, i, j)
                continue
            if o_final is None:
                continue
        else:
            o_final = o_det
        direction = classify(o_final, cfg.o_right, cfg.class_threshold)
        instances.append(OrientedInstance(obs.sample_index, o_det, o_model, o_final, direction, (i, j)))

    d_w = sum(1 for x in instances if x.direction is Direction.WRONG_WAY)
    counts = PairCounts(obs.sample_index, d_r=len(instances) - d_w, d_w=d_w, matched=len(matches))
    return counts, instances


# ---------- Stream ----------
def _check_stream(stream: Sequence[FramePairObservation], t_gap: float) -> None:
    prev_t = -math.inf
    for pos, obs in enumerate(stream):
        if obs.sample_index != pos:
            raise MalformedStreamError(f"expected sample index {pos}, got {obs.sample_index}")
        if not obs.t_k > prev_t:
            raise MalformedStreamError(f"sample {pos}: t_k={obs.t_k} does not increase")
        if not obs.intra_pair_dt < t_gap:
            raise MalformedStreamError(
                f"sample {pos}: intra_pair_dt={obs.intra_pair_dt} is not below t_gap={t_gap}")
        prev_t = obs.t_k


def infer_t_gap(stream: Sequence[FramePairObservation], default: float = DEFAULT_T_GAP) -> float:
    if len(stream) >= 2:
        return stream[1].t_k - stream[0].t_k
    return default


def detect_stream(
    stream: Sequence[FramePairObservation],
    oracle: Optional[OrientationOracle],
    cfg: DetectorConfig = DetectorConfig(),
    *,
    t_gap: Optional[float] = None,
    max_workers: int = 1,
) -> List[Tuple[PairCounts, List[OrientedInstance]]]:
    """process_pair over a validated stream, results in sample order."""
    stream = list(stream)
    _check_stream(stream, t_gap if t_gap is not None else infer_t_gap(stream))
    if max_workers > 1 and len(stream) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(lambda o: process_pair(o, oracle, cfg), stream))
    return [process_pair(o, oracle, cfg) for o in stream]


def process_stream(
    stream: Sequence[FramePairObservation],
    oracle: Optional[OrientationOracle],
    cfg: DetectorConfig = DetectorConfig(),
    *,
    t_gap: Optional[float] = None,
    max_workers: int = 1,
) -> Tuple[CountSeries, CountSeries]:
    stream = list(stream)
    gap = t_gap if t_gap is not None else infer_t_gap(stream)
    results = detect_stream(stream, oracle, cfg, t_gap=gap, max_workers=max_workers)
    d_r = [c.d_r for c, _ in results]
    d_w = [c.d_w for c, _ in results]
    log.info("detected %d samples: %d right-way / %d wrong-way instance counts",
             len(results), sum(d_r), sum(d_w))
    return (CountSeries.of(d_r, gap, Direction.RIGHT_WAY),
            CountSeries.of(d_w, gap, Direction.WRONG_WAY))
