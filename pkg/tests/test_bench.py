import math
from dataclasses import replace

import pandas as pd
import pytest

from bench import (DETECTION_ONLY, ENSEMBLE, ROW_COLUMNS, TRACKER, frame_budget, minute_table, run_bench,
                   summarize)
from config import RunConfig, SamplingConfig
from simulator import ScenarioConfig


def small_run(**scenario):
    return RunConfig(scenario=ScenarioConfig(duration=180.0, **scenario),
                     sampling=SamplingConfig(t_gaps=(2.0,)), seeds=2)


def test_frame_budget():
    sparse, dense, ratio = frame_budget(1200.0, 2.0, 0.17)
    assert sparse == 2 * 600
    assert dense == math.ceil(1200 / 0.17)
    assert ratio >= 5.8
    assert ratio == pytest.approx(2.0 / (2 * 0.17), rel=0.01)
    assert frame_budget(1200.0, 4.0, 0.17)[2] > 11.0


def test_summarize_counts_ensemble_wins():
    rows = pd.DataFrame([
        {"seed": 1, "method": ENSEMBLE, "t_gap": 2.0, "frames_processed": 10, "abs_error": 0.01},
        {"seed": 1, "method": DETECTION_ONLY, "t_gap": 2.0, "frames_processed": 10, "abs_error": 0.05},
        {"seed": 2, "method": ENSEMBLE, "t_gap": 2.0, "frames_processed": 10, "abs_error": 0.04},
        {"seed": 2, "method": DETECTION_ONLY, "t_gap": 2.0, "frames_processed": 10, "abs_error": 0.02},
        {"seed": 1, "method": TRACKER, "t_gap": None, "frames_processed": 60, "abs_error": 0.0},
        {"seed": 2, "method": TRACKER, "t_gap": None, "frames_processed": 60, "abs_error": None},
    ], columns=ROW_COLUMNS)
    summary = summarize(rows).set_index("method")
    assert summary.loc[ENSEMBLE, "mean_abs_error"] == pytest.approx(0.025)
    assert summary.loc[ENSEMBLE, "ensemble_win_fraction"] == 0.5
    assert math.isnan(summary.loc[DETECTION_ONLY, "ensemble_win_fraction"])
    assert math.isnan(summary.loc[TRACKER, "t_gap"])
    assert summary.loc[TRACKER, "mean_abs_error"] == 0.0
    assert summary.loc[TRACKER, "seeds"] == 2


def test_summarize_empty():
    assert summarize(pd.DataFrame(columns=ROW_COLUMNS)).empty


def test_run_bench_rows():
    result = run_bench(small_run(seed=3))
    assert len(result.rows) == 2 * 3
    assert set(result.rows["method"]) == {ENSEMBLE, DETECTION_ONLY, TRACKER}
    assert list(result.rows.columns) == ROW_COLUMNS
    assert (result.rows["seed"].unique() == [3, 4]).all()
    assert result.minutes is None
    sparse = result.rows[result.rows["method"] == ENSEMBLE]["frames_processed"]
    assert (sparse == 2 * 90).all()


def test_run_bench_method_subset_and_minutes():
    result = run_bench(small_run(seed=3), seeds=[8], methods=(TRACKER,), minutes=True)
    assert result.rows["method"].tolist() == [TRACKER]
    assert result.minutes["minute"].tolist() == [0, 1, 2]
    assert {"true_ratio", "estimated_ratio", "abs_error"} <= set(result.minutes.columns)


def test_failures_become_notes():
    # no riders at all: every method reports an undefined ratio instead of raising
    run = replace(small_run(arrival_rate_r=0.0, arrival_rate_w=0.0, false_positive_rate=0.0), seeds=1)
    result = run_bench(run)
    assert result.rows["estimated_ratio"].isna().all()
    assert result.rows["note"].str.contains("Error").all()
