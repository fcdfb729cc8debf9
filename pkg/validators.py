# validators.py
"""
Range validators for the run configuration.
Each returns a list of issues; empty == OK. Issues start with the flat config key
they concern ("duration: must be > 0") so callers can point at the offending line.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any, List

if TYPE_CHECKING:
    from config import RunConfig, SamplingConfig
    from detector import DetectorConfig
    from simulator import ScenarioConfig
    from tracker_baseline import TrackerConfig


# ─────────────────── util helpers ───────────────────
def _finite(x: Any) -> bool:
    try:
        return math.isfinite(float(x))
    except (TypeError, ValueError):
        return False


def _check(errs: List[str], key: str, value: Any, ok: bool, rule: str) -> None:
    if not _finite(value) or not ok:
        errs.append(f"{key}: {rule}, got {value!r}")


def _positive(errs: List[str], key: str, value: float) -> None:
    _check(errs, key, value, _finite(value) and value > 0.0, "must be > 0")


def _non_negative(errs: List[str], key: str, value: float) -> None:
    _check(errs, key, value, _finite(value) and value >= 0.0, "must be >= 0")


def _probability(errs: List[str], key: str, value: float) -> None:
    _check(errs, key, value, _finite(value) and 0.0 <= value < 1.0, "must be in [0, 1)")


# ─────────────────── scenario ───────────────────
def validate_scenario_config(cfg: "ScenarioConfig") -> List[str]:
    errs: List[str] = []
    for key in ("duration", "fov_length", "px_per_meter", "arrival_interval", "speed_mean",
                "speed_min", "speed_max", "vehicle_length", "vehicle_width", "min_spacing"):
        _positive(errs, key, getattr(cfg, key))
    for key in ("arrival_rate_r", "arrival_rate_w", "speed_std", "turnoff_rate", "min_path",
                "false_positive_rate", "bbox_jitter", "size_jitter", "oracle_noise"):
        _non_negative(errs, key, getattr(cfg, key))
    for key in ("arrival_burstiness", "miss_rate", "oracle_flip"):
        _probability(errs, key, getattr(cfg, key))
    _check(errs, "right_way_heading", cfg.right_way_heading, True, "must be finite")

    if _finite(cfg.speed_min) and _finite(cfg.speed_max) and cfg.speed_min > cfg.speed_max:
        errs.append(f"speed_min: must not exceed speed_max ({cfg.speed_min} > {cfg.speed_max})")
    if _finite(cfg.min_spacing) and _finite(cfg.vehicle_length) and cfg.min_spacing < cfg.vehicle_length:
        errs.append(f"min_spacing: must be at least vehicle_length ({cfg.min_spacing} < {cfg.vehicle_length})")
    for key in ("lane_y_right", "lane_y_wrong"):
        lo, hi = getattr(cfg, key)
        if not (_finite(lo) and _finite(hi) and lo < hi):
            errs.append(f"{key}: needs two finite bounds low < high, got ({lo!r}, {hi!r})")
    (r_lo, r_hi), (w_lo, w_hi) = cfg.lane_y_right, cfg.lane_y_wrong
    if r_lo < w_hi and w_lo < r_hi:
        errs.append("lane_y_wrong: lateral band overlaps lane_y_right")
    if int(cfg.seed) != cfg.seed or cfg.seed < 0:
        errs.append(f"seed: must be a non-negative integer, got {cfg.seed!r}")
    return errs


# ─────────────────── detector / sampling / tracker ───────────────────
def validate_detector_config(cfg: "DetectorConfig") -> List[str]:
    errs: List[str] = []
    _check(errs, "iou_max", cfg.iou_max, 0.0 < cfg.iou_max <= 1.0, "must be in (0, 1]")
    _probability(errs, "iou_min", cfg.iou_min)
    if _finite(cfg.iou_min) and _finite(cfg.iou_max) and not cfg.iou_min < cfg.iou_max:
        errs.append(f"iou_min: must be below iou_max ({cfg.iou_min} >= {cfg.iou_max})")
    _check(errs, "div_max", cfg.div_max, 0.0 < cfg.div_max <= math.pi, "must be in (0, pi]")
    _check(errs, "class_threshold", cfg.class_threshold, 0.0 < cfg.class_threshold <= math.pi,
           "must be in (0, pi]")
    _check(errs, "o_right", cfg.o_right, True, "must be finite")
    return errs


def validate_sampling_config(cfg: "SamplingConfig") -> List[str]:
    errs: List[str] = []
    _positive(errs, "intra_pair_dt", cfg.intra_pair_dt)
    _positive(errs, "frame_dt", cfg.frame_dt)
    for key, gap in [("t_gap", cfg.t_gap)] + [("t_gaps", g) for g in cfg.t_gaps]:
        _check(errs, key, gap, _finite(gap) and gap > cfg.intra_pair_dt,
               f"must exceed intra_pair_dt={cfg.intra_pair_dt}")
    if not cfg.t_gaps:
        errs.append("t_gaps: needs at least one sampling interval")
    return errs


def validate_tracker_config(cfg: "TrackerConfig") -> List[str]:
    errs: List[str] = []
    _probability(errs, "tracker_iou_min", cfg.iou_min)
    if int(cfg.max_age) != cfg.max_age or cfg.max_age < 1:
        errs.append(f"max_age: must be an integer >= 1, got {cfg.max_age!r}")
    _non_negative(errs, "min_displacement", cfg.min_displacement)
    return errs


def validate_run_config(run: "RunConfig") -> List[str]:
    errs = (validate_detector_config(run.detector)
            + validate_sampling_config(run.sampling)
            + validate_tracker_config(run.tracker)
            + validate_scenario_config(run.scenario))
    if run.seeds < 1:
        errs.append(f"seeds: must be >= 1, got {run.seeds}")
    if run.max_workers < 1:
        errs.append(f"max_workers: must be >= 1, got {run.max_workers}")
    return errs
