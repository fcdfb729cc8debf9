# simulator.py — synthetic cycle-lane traffic with ground truth
"""
Desk-scale stand-in for annotated CCTV footage.

A straight road segment of `fov_length` meters is in view. Right-way riders travel
along `right_way_heading` (image coordinates, y down), wrong-way riders along the
opposite heading in their own lateral band. Each band is split into sub-lanes one
rider footprint apart; riders sharing a sub-lane keep `min_spacing` and never
overtake, so no two true boxes ever overlap. Every rider moves at constant speed
across the view. Side exits (a memoryless turn-off hazard per meter) are opt-in.

Right-way arrival counts follow a binomially thinned AR(1) process with persistence
`arrival_burstiness` per `arrival_interval`. Wrong-way arrivals are plain Poisson.

All randomness flows from numpy PCG64 generators seeded from the config seed:
  - scenario generation: one sequential stream
  - rendering: one generator per frame, seeded (seed, stream tag, frame index)
  - appearance noise: one generator per (vehicle, time), so any frame can be
    re-rendered or queried on its own.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from angles import CyclicAngle, wrap_angle
from arma import Direction
from detector import FramePairObservation
from errors import InvalidParameterError
from geometry import BoundingBox, iou
from validators import validate_scenario_config

log = logging.getLogger(__name__)

DEFAULT_FRAME_DT = 0.17

_STREAM_SCENARIO = 1
_STREAM_SPARSE = 2
_STREAM_DENSE = 3
_STREAM_ORACLE = 4
_STREAM_CLUTTER = 5

ORACLE_MATCH_IOU = 0.1
_LANE_MARGIN_PX = 20.0


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 1200.0                      # s
    fov_length: float = 40.0                      # m
    px_per_meter: float = 10.0
    lane_y_right: Tuple[float, float] = (20.0, 60.0)     # px, lateral offset from the road axis
    lane_y_wrong: Tuple[float, float] = (-60.0, -20.0)
    right_way_heading: float = 0.0                # rad
    arrival_rate_r: float = 18.0                  # riders / min
    arrival_rate_w: float = 2.0
    arrival_burstiness: float = 0.4               # share of right-way arrivals carried over per interval
    arrival_interval: float = 2.0                 # s, step of the thinned arrival process
    speed_mean: float = 4.0                       # m/s
    speed_std: float = 0.8
    speed_min: float = 1.5
    speed_max: float = 8.0
    turnoff_rate: float = 0.0                     # side exits per meter; 0 = through traffic
    min_path: float = 0.0                         # m travelled before a side exit is possible
    vehicle_length: float = 2.0                   # m
    vehicle_width: float = 1.6
    min_spacing: float = 4.0                      # m, centre distance kept within a sub-lane
    miss_rate: float = 0.05
    false_positive_rate: float = 0.3              # clutter boxes per frame
    bbox_jitter: float = 6.0                      # px, centroid
    size_jitter: float = 0.05                     # relative
    oracle_noise: float = 0.35                    # rad
    oracle_flip: float = 0.1
    seed: int = 7


def noise_free(cfg: ScenarioConfig = ScenarioConfig()) -> ScenarioConfig:
    return replace(cfg, miss_rate=0.0, false_positive_rate=0.0, bbox_jitter=0.0,
                   size_jitter=0.0, oracle_noise=0.0, oracle_flip=0.0)


# ─────────────────── trajectories ───────────────────
@dataclass(frozen=True)
class Vehicle:
    vehicle_id: int
    direction: Direction
    t_enter: float
    speed: float          # m/s
    lateral: float        # px
    path: float           # m travelled inside the view
    heading: float        # rad, direction of travel
    road_heading: float
    fov_length: float
    px_per_meter: float
    size_px: Tuple[float, float]

    @property
    def t_exit(self) -> float:
        return self.t_enter + self.path / self.speed

    def visible(self, t: float) -> bool:
        return self.t_enter <= t < self.t_exit

    def centroid_at(self, t: float) -> Tuple[float, float]:
        travelled = self.speed * (t - self.t_enter)
        s = travelled if self.direction is Direction.RIGHT_WAY else self.fov_length - travelled
        s_px = s * self.px_per_meter
        ux, uy = math.cos(self.road_heading), math.sin(self.road_heading)
        return (s_px * ux - self.lateral * uy, s_px * uy + self.lateral * ux)

    def box_at(self, t: float) -> BoundingBox:
        cx, cy = self.centroid_at(t)
        w, h = self.size_px
        return BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


@dataclass(frozen=True)
class GroundTruth:
    n_right: int
    n_wrong: int
    # riders by minute of entry
    per_minute_right: Tuple[int, ...] = ()
    per_minute_wrong: Tuple[int, ...] = ()

    @property
    def true_ratio(self) -> Optional[float]:
        total = self.n_right + self.n_wrong
        return self.n_wrong / total if total else None

    def per_minute_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({"minute": range(len(self.per_minute_right)),
                           "n_right": self.per_minute_right,
                           "n_wrong": self.per_minute_wrong})
        total = df["n_right"] + df["n_wrong"]
        df["ratio"] = (df["n_wrong"] / total.where(total > 0)).astype(float)
        return df


@dataclass
class Scenario:
    cfg: ScenarioConfig
    vehicles: Tuple[Vehicle, ...]
    ground_truth: GroundTruth
    _t_enter: np.ndarray = field(init=False, repr=False)
    _t_exit: np.ndarray = field(init=False, repr=False)
    _by_id: Dict[int, Vehicle] = field(init=False, repr=False)

    def __post_init__(self):
        self._t_enter = np.array([v.t_enter for v in self.vehicles], dtype=float)
        self._t_exit = np.array([v.t_exit for v in self.vehicles], dtype=float)
        self._by_id = {v.vehicle_id: v for v in self.vehicles}

    @classmethod
    def from_vehicles(cls, cfg: ScenarioConfig, vehicles: Sequence[Vehicle]) -> "Scenario":
        vehicles = tuple(vehicles)
        gt = tally_ground_truth(cfg, vehicles)
        if gt.true_ratio is None:
            log.warning("scenario has no riders; true ratio undefined")
        else:
            log.info("scenario: %d right-way, %d wrong-way riders (true ratio %.4f)",
                     gt.n_right, gt.n_wrong, gt.true_ratio)
        return cls(cfg, vehicles, gt)

    def vehicle(self, vehicle_id: int) -> Vehicle:
        return self._by_id[vehicle_id]

    def visible_at(self, t: float) -> List[Vehicle]:
        idx = np.nonzero((self._t_enter <= t) & (t < self._t_exit))[0]
        return [self.vehicles[i] for i in idx]


def _footprint_px(cfg: ScenarioConfig) -> Tuple[float, float]:
    # axis-aligned extent of the rotated rider footprint
    c, s = abs(math.cos(cfg.right_way_heading)), abs(math.sin(cfg.right_way_heading))
    length, width = cfg.vehicle_length, cfg.vehicle_width
    return ((length * c + width * s) * cfg.px_per_meter, (length * s + width * c) * cfg.px_per_meter)


def _poisson_times(rng: np.random.Generator, rate_per_s: float, horizon: float) -> np.ndarray:
    if rate_per_s <= 0.0 or horizon <= 0.0:
        return np.zeros(0)
    n = rng.poisson(rate_per_s * horizon)
    return np.sort(rng.uniform(0.0, horizon, size=n))


def thinned_arrivals(
    rng: np.random.Generator, rate_per_s: float, burstiness: float, interval: float, horizon: float
) -> np.ndarray:
    """
    Arrival times on [0, horizon) from a binomially thinned AR(1) count process.

    Per `interval`, every arrival of the previous interval recurs with probability
    `burstiness`, plus Poisson newcomers at (1 - burstiness) * rate. The stationary
    count is Poisson(rate * interval) with lag-k autocorrelation burstiness**k;
    burstiness 0 is a plain Poisson process. Times are uniform within their interval.
    """
    if rate_per_s <= 0.0 or horizon <= 0.0:
        return np.zeros(0)
    mean = rate_per_s * interval
    n = math.ceil(horizon / interval)
    counts = np.empty(n, dtype=np.int64)
    prev = rng.poisson(mean)
    for k in range(n):
        prev = rng.binomial(prev, burstiness) + rng.poisson((1.0 - burstiness) * mean)
        counts[k] = prev
    starts = np.repeat(np.arange(n) * interval, counts)
    times = starts + rng.uniform(0.0, interval, size=starts.size)
    return np.sort(times[times < horizon])


def sublane_offsets(cfg: ScenarioConfig, band: Tuple[float, float]) -> Tuple[float, ...]:
    """Centres of the sub-lanes of a lateral band, at least one rider footprint apart."""
    lo, hi = band
    w, h = _footprint_px(cfg)
    extent = w * abs(math.sin(cfg.right_way_heading)) + h * abs(math.cos(cfg.right_way_heading))
    n = max(1, int((hi - lo) // extent))
    pitch = (hi - lo) / n
    return tuple(lo + (i + 0.5) * pitch for i in range(n))


@dataclass
class _SubLane:
    lateral: float
    # (t_enter, speed, path) of riders that may still be in view
    riders: List[Tuple[float, float, float]] = field(default_factory=list)

    def clear_entry(self, t: float, speed: float, spacing: float) -> Tuple[float, float]:
        """
        Earliest (t_enter, speed) at or after t that stays `spacing` meters behind
        every rider ahead for as long as that rider is in view. A rider that would
        close in is slowed to the slowest rider ahead and held back at the entry.
        """
        self.riders = [r for r in self.riders if r[0] + r[2] / r[1] > t]

        def keeps_clear(t0: float, v0: float, p0: float) -> bool:
            if v0 * (t - t0) < spacing:
                return False
            return p0 - speed * (t0 + p0 / v0 - t) >= spacing

        if all(keeps_clear(*r) for r in self.riders):
            return t, speed
        v = min([speed] + [v0 for _, v0, _ in self.riders])
        return max([t] + [t0 + spacing / v0 for t0, v0, _ in self.riders]), v


def _place(lanes: Sequence[_SubLane], order: Sequence[int], t: float, speed: float,
           spacing: float) -> Tuple[int, float, float]:
    best: Optional[Tuple[int, float, float]] = None
    for i in order:
        t_in, v = lanes[i].clear_entry(t, speed, spacing)
        if t_in == t and v == speed:
            return int(i), t_in, v
        if best is None or t_in < best[1]:
            best = (int(i), t_in, v)
    return best


def generate_scenario(cfg: ScenarioConfig = ScenarioConfig()) -> Scenario:
    issues = validate_scenario_config(cfg)
    if issues:
        raise InvalidParameterError("; ".join(issues))

    rng = np.random.default_rng([cfg.seed, _STREAM_SCENARIO])
    # the last rider must be able to cross the full view before the recording ends
    horizon = cfg.duration - cfg.fov_length / cfg.speed_min
    if horizon <= 0.0:
        log.warning("duration %.1fs too short for a full crossing; scenario is empty", cfg.duration)

    right = thinned_arrivals(rng, cfg.arrival_rate_r / 60.0, cfg.arrival_burstiness, cfg.arrival_interval, horizon)
    wrong = _poisson_times(rng, cfg.arrival_rate_w / 60.0, horizon)

    def draw_speed() -> float:
        return float(np.clip(rng.normal(cfg.speed_mean, cfg.speed_std), cfg.speed_min, cfg.speed_max))

    def draw_path() -> float:
        if cfg.turnoff_rate <= 0.0:
            return cfg.fov_length
        return float(min(cfg.fov_length, cfg.min_path + rng.exponential(1.0 / cfg.turnoff_rate)))

    # (t_enter, direction, speed, lateral, path)
    riders: List[Tuple[float, Direction, float, float, float]] = []
    held = 0
    for direction, times, band in ((Direction.RIGHT_WAY, right, cfg.lane_y_right),
                                   (Direction.WRONG_WAY, wrong, cfg.lane_y_wrong)):
        lanes = [_SubLane(lat) for lat in sublane_offsets(cfg, band)]
        for t in times:
            speed, path = draw_speed(), draw_path()
            i, t_in, v = _place(lanes, rng.permutation(len(lanes)), float(t), speed, cfg.min_spacing)
            if t_in >= horizon:
                held += 1
                continue
            lanes[i].riders.append((t_in, v, path))
            riders.append((t_in, direction, v, lanes[i].lateral, path))
    if held:
        log.debug("%d arrivals could not enter before the arrival window closed", held)
    riders.sort(key=lambda r: r[0])
    vehicles = tuple(make_vehicle(cfg, i, d, t, v, lat, path) for i, (t, d, v, lat, path) in enumerate(riders))
    return Scenario.from_vehicles(cfg, vehicles)


def make_vehicle(
    cfg: ScenarioConfig,
    vehicle_id: int,
    direction: Direction,
    t_enter: float,
    speed: float,
    lateral: float,
    path: Optional[float] = None,
) -> Vehicle:
    heading = cfg.right_way_heading
    if direction is Direction.WRONG_WAY:
        heading = wrap_angle(heading + math.pi)
    return Vehicle(vehicle_id=vehicle_id, direction=direction, t_enter=t_enter, speed=speed,
                   lateral=lateral, path=cfg.fov_length if path is None else path, heading=heading,
                   road_heading=cfg.right_way_heading, fov_length=cfg.fov_length,
                   px_per_meter=cfg.px_per_meter, size_px=_footprint_px(cfg))


def tally_ground_truth(cfg: ScenarioConfig, vehicles: Sequence[Vehicle]) -> GroundTruth:
    n_minutes = math.ceil(cfg.duration / 60.0 - 1e-9)
    per_r, per_w = [0] * n_minutes, [0] * n_minutes
    for v in vehicles:
        minute = min(int(v.t_enter // 60.0), n_minutes - 1)
        (per_r if v.direction is Direction.RIGHT_WAY else per_w)[minute] += 1
    return GroundTruth(n_right=sum(per_r), n_wrong=sum(per_w),
                       per_minute_right=tuple(per_r), per_minute_wrong=tuple(per_w))


# ─────────────────── appearance oracle ───────────────────
class SimulatedOracle:
    """
    Noisy appearance heading: true heading plus Gaussian noise, replaced by a
    uniform angle with probability `flip`. Boxes that match no rider get a uniform
    angle. Answers depend only on (seed, rider, time), never on query order.
    """

    def __init__(self, scenario: Scenario, noise: float, flip: float, seed: int):
        self.scenario = scenario
        self.noise = noise
        self.flip = flip
        self.seed = seed

    def heading(self, vehicle_id: int, t: float) -> CyclicAngle:
        v = self.scenario.vehicle(vehicle_id)
        rng = np.random.default_rng([self.seed, _STREAM_ORACLE, vehicle_id, int(round(t * 1000))])
        draw_flip, draw_noise, draw_uniform = rng.random(), rng.standard_normal(), rng.uniform(-math.pi, math.pi)
        if draw_flip < self.flip:
            return wrap_angle(draw_uniform)
        return wrap_angle(v.heading + self.noise * draw_noise)

    def clutter_heading(self, t: float, box: BoundingBox) -> CyclicAngle:
        key = [self.seed, _STREAM_CLUTTER, int(round(t * 1000))]
        key += [int(round(abs(x) * 1000)) for x in box.as_xyxy()]
        return wrap_angle(np.random.default_rng(key).uniform(-math.pi, math.pi))

    def match(self, t: float, box: BoundingBox) -> Optional[Vehicle]:
        best, best_iou = None, ORACLE_MATCH_IOU
        for v in self.scenario.visible_at(t):
            o = iou(box, v.box_at(t))
            if o >= best_iou:
                best, best_iou = v, o
        return best

    def orientation(self, frame_time: float, box: BoundingBox) -> CyclicAngle:
        v = self.match(frame_time, box)
        if v is None:
            return self.clutter_heading(frame_time, box)
        return self.heading(v.vehicle_id, frame_time)


def noisy_oracle(scenario: Scenario, cfg: Optional[ScenarioConfig] = None) -> SimulatedOracle:
    cfg = cfg or scenario.cfg
    return SimulatedOracle(scenario, cfg.oracle_noise, cfg.oracle_flip, cfg.seed)


# ─────────────────── rendering ───────────────────
@dataclass(frozen=True)
class DenseFrame:
    frame_index: int
    t: float
    detections: Tuple[BoundingBox, ...] = ()
    vehicle_ids: Tuple[Optional[int], ...] = ()


def _clutter_extent(cfg: ScenarioConfig) -> Tuple[float, float, float, float]:
    lat_lo = min(cfg.lane_y_right[0], cfg.lane_y_wrong[0]) - _LANE_MARGIN_PX
    lat_hi = max(cfg.lane_y_right[1], cfg.lane_y_wrong[1]) + _LANE_MARGIN_PX
    ux, uy = math.cos(cfg.right_way_heading), math.sin(cfg.right_way_heading)
    s_hi = cfg.fov_length * cfg.px_per_meter
    corners = [(s * ux - lat * uy, s * uy + lat * ux) for s in (0.0, s_hi) for lat in (lat_lo, lat_hi)]
    xs, ys = zip(*corners)
    return min(xs), min(ys), max(xs), max(ys)


def _render_frame(
    scenario: Scenario, t: float, rng: np.random.Generator
) -> Tuple[Tuple[BoundingBox, ...], Tuple[Optional[int], ...]]:
    cfg = scenario.cfg
    boxes: List[BoundingBox] = []
    ids: List[Optional[int]] = []
    for v in scenario.visible_at(t):
        miss, conf = rng.random(), rng.uniform(0.5, 1.0)
        dx, dy = rng.normal(0.0, 1.0, size=2) * cfg.bbox_jitter
        scale = max(0.5, 1.0 + cfg.size_jitter * rng.standard_normal())
        if miss < cfg.miss_rate:
            continue
        cx, cy = v.centroid_at(t)
        w, h = v.size_px[0] * scale, v.size_px[1] * scale
        boxes.append(BoundingBox(cx + dx - w / 2, cy + dy - h / 2, cx + dx + w / 2, cy + dy + h / 2, conf))
        ids.append(v.vehicle_id)

    if cfg.false_positive_rate > 0.0:
        x0, y0, x1, y1 = _clutter_extent(cfg)
        w0, h0 = _footprint_px(cfg)
        for _ in range(rng.poisson(cfg.false_positive_rate)):
            cx, cy = rng.uniform(x0, x1), rng.uniform(y0, y1)
            w, h = w0 * rng.uniform(0.6, 1.4), h0 * rng.uniform(0.6, 1.4)
            boxes.append(BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2, rng.uniform(0.3, 0.8)))
            ids.append(None)
    return tuple(boxes), tuple(ids)


def _appearance(oracle: SimulatedOracle, t: float, boxes, ids) -> Tuple[float, ...]:
    return tuple(oracle.heading(i, t) if i is not None else oracle.clutter_heading(t, b)
                 for b, i in zip(boxes, ids))


def frame_count(duration: float, dt: float) -> int:
    return max(0, math.ceil(duration / dt - 1e-9))


def render_sparse(scenario: Scenario, t_gap: float = 2.0, intra_pair_dt: float = 0.2) -> List[FramePairObservation]:
    """
    One frame pair per sample time t_k = k * t_gap, k = 0..ceil(duration / t_gap) - 1.
    Detections carry their rider id and a recorded appearance heading.
    """
    if not t_gap > intra_pair_dt > 0.0:
        raise InvalidParameterError(f"need t_gap > intra_pair_dt > 0, got {t_gap} and {intra_pair_dt}")
    cfg = scenario.cfg
    oracle = noisy_oracle(scenario)
    out: List[FramePairObservation] = []
    for k in range(frame_count(cfg.duration, t_gap)):
        t1 = k * t_gap
        t2 = t1 + intra_pair_dt
        b1, ids1 = _render_frame(scenario, t1, np.random.default_rng([cfg.seed, _STREAM_SPARSE, 2 * k]))
        b2, ids2 = _render_frame(scenario, t2, np.random.default_rng([cfg.seed, _STREAM_SPARSE, 2 * k + 1]))
        out.append(FramePairObservation(
            sample_index=k, t_k=t1, intra_pair_dt=intra_pair_dt,
            detections_1=b1, detections_2=b2, vehicle_ids_1=ids1, vehicle_ids_2=ids2,
            appearance_1=_appearance(oracle, t1, b1, ids1),
            appearance_2=_appearance(oracle, t2, b2, ids2),
        ))
    log.info("rendered %d frame pairs (t_gap=%.2fs)", len(out), t_gap)
    return out


def render_dense(scenario: Scenario, frame_dt: float = DEFAULT_FRAME_DT) -> List[DenseFrame]:
    if not frame_dt > 0.0:
        raise InvalidParameterError(f"frame_dt must be > 0, got {frame_dt}")
    cfg = scenario.cfg
    out: List[DenseFrame] = []
    for i in range(frame_count(cfg.duration, frame_dt)):
        t = i * frame_dt
        boxes, ids = _render_frame(scenario, t, np.random.default_rng([cfg.seed, _STREAM_DENSE, i]))
        out.append(DenseFrame(i, t, boxes, ids))
    log.info("rendered %d dense frames (frame_dt=%.2fs)", len(out), frame_dt)
    return out
