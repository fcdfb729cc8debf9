# tracker_baseline.py — dense-frame IoU tracker used as the comparison baseline
"""
SORT-style association without a motion model: each frame, the last box of every
active track is matched to the new detections on IoU (optimal assignment), leftover
detections open new tracks and tracks unmatched for `max_age` consecutive frames
are finished. Every track is one counted rider.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence, Tuple

from scipy.optimize import linear_sum_assignment

from arma import Direction, RatioReport
from assignment import DEFAULT_IOU_MIN
from detector import CLASS_THRESHOLD, classify, motion_orientation
from errors import InvalidParameterError, MalformedStreamError, UndefinedRatioError
from geometry import BoundingBox, centroid, iou_matrix
from simulator import DenseFrame

log = logging.getLogger(__name__)

DEFAULT_MAX_AGE = 3
DEFAULT_MIN_DISPLACEMENT = 10.0


@dataclass(frozen=True)
class TrackerConfig:
    iou_min: float = DEFAULT_IOU_MIN
    max_age: int = DEFAULT_MAX_AGE
    min_displacement: float = DEFAULT_MIN_DISPLACEMENT    # px


class TrackState(str, Enum):
    ACTIVE = "active"
    FINISHED = "finished"


@dataclass
class Track:
    track_id: int
    boxes: List[Tuple[float, BoundingBox]] = field(default_factory=list)
    state: TrackState = TrackState.ACTIVE
    misses: int = 0

    def extend(self, t: float, box: BoundingBox) -> None:
        if self.state is TrackState.FINISHED:
            raise InvalidParameterError(f"track {self.track_id} is finished")
        if self.boxes and not t > self.boxes[-1][0]:
            raise InvalidParameterError(f"track {self.track_id}: t={t} does not follow {self.boxes[-1][0]}")
        self.boxes.append((t, box))
        self.misses = 0

    def finish(self) -> None:
        self.state = TrackState.FINISHED

    @property
    def last_box(self) -> BoundingBox:
        return self.boxes[-1][1]

    def displacement(self) -> float:
        (x1, y1), (x2, y2) = centroid(self.boxes[0][1]), centroid(self.boxes[-1][1])
        return math.hypot(x2 - x1, y2 - y1)


def track_stream(
    frames: Sequence[DenseFrame],
    iou_min: float = DEFAULT_IOU_MIN,
    max_age: int = DEFAULT_MAX_AGE,
) -> List[Track]:
    if max_age < 1:
        raise InvalidParameterError(f"max_age must be >= 1, got {max_age}")
    tracks: List[Track] = []
    active: List[Track] = []
    prev_t = -math.inf
    for frame in frames:
        if not frame.t > prev_t:
            raise MalformedStreamError(f"frame {frame.frame_index}: t={frame.t} does not increase")
        prev_t = frame.t
        dets = frame.detections

        matched_tracks, matched_dets = set(), set()
        if active and dets:
            m = iou_matrix([tr.last_box for tr in active], dets)
            rows, cols = linear_sum_assignment(m, maximize=True)
            for r, c in zip(rows, cols):
                if m[r, c] > iou_min:
                    active[r].extend(frame.t, dets[c])
                    matched_tracks.add(r)
                    matched_dets.add(c)

        still_active: List[Track] = []
        for r, tr in enumerate(active):
            if r not in matched_tracks:
                tr.misses += 1
                if tr.misses >= max_age:
                    tr.finish()
                    continue
            still_active.append(tr)
        for c, box in enumerate(dets):
            if c not in matched_dets:
                tr = Track(len(tracks))
                tr.extend(frame.t, box)
                tracks.append(tr)
                still_active.append(tr)
        active = still_active

    for tr in active:
        tr.finish()
    log.info("tracked %d frames into %d tracks", len(frames), len(tracks))
    return tracks


def tracks_to_ratio(
    tracks: Sequence[Track],
    o_right: float = 0.0,
    min_displacement: float = DEFAULT_MIN_DISPLACEMENT,
    threshold: float = CLASS_THRESHOLD,
    y_axis_down: bool = True,
) -> RatioReport:
    """Classify each moving track by its first-to-last displacement; ratio over tracks."""
    counts = {Direction.RIGHT_WAY: 0, Direction.WRONG_WAY: 0}
    for tr in tracks:
        d = tr.displacement()
        if len(tr.boxes) < 2 or d == 0.0 or d < min_displacement:
            continue
        heading = motion_orientation(tr.boxes[0][1], tr.boxes[-1][1], y_axis_down)
        counts[classify(heading, o_right, threshold)] += 1
    n_r, n_w = counts[Direction.RIGHT_WAY], counts[Direction.WRONG_WAY]
    if n_r + n_w == 0:
        raise UndefinedRatioError("no track moved far enough to be classified")
    ratio = n_w / (n_r + n_w)
    log.info("tracker baseline: %d right-way / %d wrong-way tracks", n_r, n_w)
    return RatioReport(ratio=ratio, sum_r=float(n_r), sum_w=float(n_w), raw_ratio=ratio)


def frames_per_minute(frame_dt: float) -> float:
    return 60.0 / frame_dt


def sparse_frames_per_minute(t_gap: float) -> float:
    return 2.0 * 60.0 / t_gap
