# bench.py — comparison protocol: sparse ensemble vs detection-only vs dense tracking
"""
For every seed one scenario is generated and all methods see the same traffic:

  ensemble        sparse frame pairs, motion + appearance (And-strategy), ARMA deflation
  detection_only  sparse frame pairs, motion orientation alone, ARMA deflation
  tracker         dense frames, IoU tracking, one count per track

Sparse methods run once per sampling interval in `t_gaps`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from arma import estimate_from_counts, per_minute_ratios
from config import RunConfig
from detector import FramePairObservation, RecordedOracle, process_stream
from errors import WWCError
from simulator import Scenario, frame_count, generate_scenario, render_dense, render_sparse
from tracker_baseline import track_stream, tracks_to_ratio

log = logging.getLogger(__name__)

ENSEMBLE = "ensemble"
DETECTION_ONLY = "detection_only"
TRACKER = "tracker"
METHODS = (ENSEMBLE, DETECTION_ONLY, TRACKER)

ROW_COLUMNS = ["seed", "method", "t_gap", "frames_processed", "wall_time_s", "seconds_per_video_minute",
               "estimated_ratio", "true_ratio", "abs_error", "note"]


@dataclass
class BenchResult:
    rows: pd.DataFrame
    summary: pd.DataFrame
    minutes: Optional[pd.DataFrame] = None


def frame_budget(duration: float, t_gap: float, frame_dt: float) -> Tuple[int, int, float]:
    """(sparse frames, dense frames, dense / sparse)."""
    sparse = 2 * frame_count(duration, t_gap)
    dense = frame_count(duration, frame_dt)
    return sparse, dense, (dense / sparse if sparse else math.inf)


def _row(seed: int, method: str, t_gap: Optional[float], frames: int, wall: float,
         duration: float, estimate: Optional[float], truth: Optional[float], note: str = "") -> Dict:
    err = abs(estimate - truth) if estimate is not None and truth is not None else None
    return {"seed": seed, "method": method, "t_gap": t_gap, "frames_processed": frames,
            "wall_time_s": wall, "seconds_per_video_minute": wall / (duration / 60.0),
            "estimated_ratio": estimate, "true_ratio": truth, "abs_error": err, "note": note}


def run_sparse(
    run: RunConfig, scenario: Scenario, t_gap: float, use_ensemble: bool,
    stream: Optional[Sequence[FramePairObservation]] = None,
):
    """Detector + estimator on one scenario; returns (report or None, frames, wall seconds, note)."""
    stream = stream if stream is not None else render_sparse(scenario, t_gap, run.sampling.intra_pair_dt)
    oracle = RecordedOracle.from_observations(stream) if use_ensemble else None
    cfg = replace(run.detector, use_ensemble=use_ensemble)
    t0 = time.perf_counter()
    try:
        right, wrong = process_stream(stream, oracle, cfg, t_gap=t_gap, max_workers=run.max_workers)
        report, note = estimate_from_counts(right, wrong, run.orders_right, run.orders_wrong), ""
    except WWCError as exc:
        log.warning("seed %d, t_gap %.1f: %s", scenario.cfg.seed, t_gap, exc)
        report, note = None, f"{type(exc).__name__}: {exc}"
    return report, 2 * len(stream), time.perf_counter() - t0, note


def run_tracker(run: RunConfig, scenario: Scenario):
    frames = render_dense(scenario, run.sampling.frame_dt)
    t0 = time.perf_counter()
    try:
        tracks = track_stream(frames, run.tracker.iou_min, run.tracker.max_age)
        report, note = tracks_to_ratio(tracks, run.detector.o_right, run.tracker.min_displacement,
                                       run.detector.class_threshold, run.detector.y_axis_down), ""
    except WWCError as exc:
        log.warning("seed %d, tracker: %s", scenario.cfg.seed, exc)
        report, note = None, f"{type(exc).__name__}: {exc}"
    return report, len(frames), time.perf_counter() - t0, note


def bench_seed(run: RunConfig, seed: int, methods: Sequence[str] = METHODS) -> List[Dict]:
    scenario = generate_scenario(replace(run.scenario, seed=seed))
    truth = scenario.ground_truth.true_ratio
    duration = scenario.cfg.duration
    rows: List[Dict] = []
    for t_gap in run.sampling.t_gaps:
        stream = render_sparse(scenario, t_gap, run.sampling.intra_pair_dt)
        for method, ensemble in ((ENSEMBLE, True), (DETECTION_ONLY, False)):
            if method not in methods:
                continue
            report, frames, wall, note = run_sparse(run, scenario, t_gap, ensemble, stream)
            rows.append(_row(seed, method, t_gap, frames, wall, duration,
                             report.ratio if report else None, truth, note))
    if TRACKER in methods:
        report, frames, wall, note = run_tracker(run, scenario)
        rows.append(_row(seed, TRACKER, None, frames, wall, duration,
                         report.ratio if report else None, truth, note))
    return rows


def summarize(rows: pd.DataFrame) -> pd.DataFrame:
    """Mean absolute error per (method, t_gap); ensemble rows also get their win fraction."""
    if rows.empty:
        return pd.DataFrame(columns=["method", "t_gap", "seeds", "frames_processed",
                                     "mean_abs_error", "ensemble_win_fraction"])
    keyed = rows.assign(t_key=rows["t_gap"].fillna(-1.0))
    summary = (keyed.groupby(["method", "t_key"], sort=False)
               .agg(seeds=("seed", "nunique"), frames_processed=("frames_processed", "mean"),
                    mean_abs_error=("abs_error", "mean"))
               .reset_index())
    summary["t_gap"] = summary["t_key"].where(summary["t_key"] >= 0.0)
    summary["ensemble_win_fraction"] = np.nan

    for t_key, group in keyed.groupby("t_key"):
        pivot = group.pivot_table(index="seed", columns="method", values="abs_error")
        if ENSEMBLE in pivot and DETECTION_ONLY in pivot:
            both = pivot[[ENSEMBLE, DETECTION_ONLY]].dropna()
            if len(both):
                wins = float((both[ENSEMBLE] <= both[DETECTION_ONLY]).mean())
                mask = (summary["method"] == ENSEMBLE) & (summary["t_key"] == t_key)
                summary.loc[mask, "ensemble_win_fraction"] = wins
    return summary.drop(columns="t_key")[["method", "t_gap", "seeds", "frames_processed",
                                          "mean_abs_error", "ensemble_win_fraction"]]


def minute_table(run: RunConfig, seed: Optional[int] = None) -> pd.DataFrame:
    """Per-minute ground truth vs ensemble estimate at run.sampling.t_gap."""
    scenario = generate_scenario(replace(run.scenario, seed=run.seed if seed is None else seed))
    t_gap = run.sampling.t_gap
    report, _, _, _ = run_sparse(run, scenario, t_gap, True)
    truth = scenario.ground_truth.per_minute_frame().rename(columns={"ratio": "true_ratio"})
    if report is None or report.deflated_right is None:
        truth["estimated_ratio"] = np.nan
    else:
        est = per_minute_ratios(report.deflated_right, report.deflated_wrong, t_gap)
        truth = truth.merge(est[["minute", "ratio"]].rename(columns={"ratio": "estimated_ratio"}),
                            on="minute", how="left")
    truth["abs_error"] = (truth["estimated_ratio"] - truth["true_ratio"]).abs()
    return truth


def run_bench(
    run: RunConfig,
    seeds: Optional[Sequence[int]] = None,
    methods: Sequence[str] = METHODS,
    minutes: bool = False,
) -> BenchResult:
    seeds = list(seeds) if seeds is not None else [run.seed + i for i in range(run.seeds)]
    rows: List[Dict] = []
    for seed in seeds:
        log.info("bench seed %d", seed)
        rows.extend(bench_seed(run, seed, methods))
    df = pd.DataFrame(rows, columns=ROW_COLUMNS)
    return BenchResult(rows=df, summary=summarize(df),
                       minutes=minute_table(run, seeds[0]) if minutes and seeds else None)
