import math
from dataclasses import replace

import numpy as np
import pytest

from angles import cyclic_error
from arma import Direction
from detector import DetectorConfig, RecordedOracle, process_stream
from errors import InvalidParameterError
from geometry import iou_matrix
from simulator import (Scenario, ScenarioConfig, frame_count, generate_scenario, make_vehicle,
                       noise_free, noisy_oracle, render_dense, render_sparse, sublane_offsets,
                       thinned_arrivals)

QUIET = noise_free(ScenarioConfig(duration=60.0, arrival_rate_r=0.0, arrival_rate_w=0.0))


def single_rider(direction=Direction.RIGHT_WAY, t_enter=3.0, speed=4.0, lateral=40.0, cfg=QUIET):
    return Scenario.from_vehicles(cfg, [make_vehicle(cfg, 0, direction, t_enter, speed, lateral)])


# ─────────── scenarios ───────────
def test_zero_rates_give_empty_scenario():
    sc = generate_scenario(QUIET)
    assert sc.vehicles == ()
    assert sc.ground_truth.true_ratio is None


def test_ground_truth_counts_generated_arrivals():
    cfg = ScenarioConfig(duration=1200.0, arrival_rate_r=9.0, arrival_rate_w=1.0, seed=21)
    sc = generate_scenario(cfg)
    gt = sc.ground_truth
    wrong = sum(1 for v in sc.vehicles if v.direction is Direction.WRONG_WAY)
    assert (gt.n_right, gt.n_wrong) == (len(sc.vehicles) - wrong, wrong)
    assert sum(gt.per_minute_right) == gt.n_right and sum(gt.per_minute_wrong) == gt.n_wrong
    assert len(gt.per_minute_right) == 20
    assert 0.02 < gt.true_ratio < 0.25


def test_same_seed_same_scenario():
    cfg = ScenarioConfig(duration=300.0, seed=4)
    assert generate_scenario(cfg).vehicles == generate_scenario(cfg).vehicles
    assert generate_scenario(cfg).vehicles != generate_scenario(replace(cfg, seed=5)).vehicles


def test_every_rider_leaves_before_the_end():
    sc = generate_scenario(ScenarioConfig(duration=600.0, seed=2))
    assert sc.vehicles
    assert all(v.t_exit <= 600.0 for v in sc.vehicles)
    assert all(v.path <= sc.cfg.fov_length for v in sc.vehicles)


def test_invalid_config_is_rejected():
    with pytest.raises(InvalidParameterError, match="duration"):
        generate_scenario(ScenarioConfig(duration=0.0))
    with pytest.raises(InvalidParameterError, match="lane_y_wrong"):
        generate_scenario(ScenarioConfig(lane_y_wrong=(0.0, 30.0)))


def test_trajectory_geometry():
    right = make_vehicle(QUIET, 0, Direction.RIGHT_WAY, 0.0, 4.0, 40.0)
    assert right.centroid_at(1.0) == pytest.approx((40.0, 40.0))
    assert right.size_px == pytest.approx((20.0, 16.0))
    wrong = make_vehicle(QUIET, 1, Direction.WRONG_WAY, 0.0, 4.0, -40.0)
    assert wrong.heading == pytest.approx(math.pi)
    assert wrong.centroid_at(0.0) == pytest.approx((400.0, -40.0))
    turned = make_vehicle(replace(QUIET, right_way_heading=math.pi / 2), 2, Direction.RIGHT_WAY, 0.0, 4.0, 0.0)
    assert turned.size_px == pytest.approx((16.0, 20.0))
    assert turned.centroid_at(1.0) == pytest.approx((0.0, 40.0))


@pytest.mark.parametrize("burstiness", [0.0, 0.4, 0.7])
def test_thinned_arrivals_have_ar1_counts(burstiness):
    times = thinned_arrivals(np.random.default_rng(0), 1.0, burstiness, 2.0, 40_000.0)
    assert np.all(np.diff(times) >= 0.0) and times[-1] < 40_000.0
    counts = np.bincount((times // 2.0).astype(int), minlength=20_000)
    assert counts.mean() == pytest.approx(2.0, abs=0.1)
    assert counts.var() / counts.mean() == pytest.approx(1.0, abs=0.1)
    lag1 = np.corrcoef(counts[:-1], counts[1:])[0, 1]
    assert lag1 == pytest.approx(burstiness, abs=0.03)


def test_sublanes_are_a_footprint_apart():
    cfg = ScenarioConfig()
    assert sublane_offsets(cfg, cfg.lane_y_right) == pytest.approx((30.0, 50.0))
    assert sublane_offsets(cfg, cfg.lane_y_wrong) == pytest.approx((-50.0, -30.0))
    assert sublane_offsets(cfg, (0.0, 10.0)) == pytest.approx((5.0,))


def test_riders_never_overlap_with_speed_spread():
    sc = generate_scenario(noise_free(ScenarioConfig(duration=300.0, seed=11)))
    lanes = set(sublane_offsets(sc.cfg, sc.cfg.lane_y_right) + sublane_offsets(sc.cfg, sc.cfg.lane_y_wrong))
    assert {v.lateral for v in sc.vehicles} <= lanes
    assert len({v.speed for v in sc.vehicles}) > 10
    for frame in render_dense(sc):
        m = iou_matrix(frame.detections, frame.detections)
        assert np.count_nonzero(m) == len(frame.detections), frame.t


# ─────────── rendering ───────────
def test_empty_scenario_renders_empty_pairs():
    stream = render_sparse(generate_scenario(QUIET), 2.0, 0.2)
    assert len(stream) == 30
    assert all(not o.detections_1 and not o.detections_2 for o in stream)


def test_single_rider_appears_in_predicted_samples():
    # visible on [3, 13): frames at 2k and 2k + 0.2 catch it for k = 2..6
    stream = render_sparse(single_rider(), 2.0, 0.2)
    seen = [o.sample_index for o in stream if o.vehicle_ids_1 == (0,) and o.vehicle_ids_2 == (0,)]
    assert seen == [2, 3, 4, 5, 6]
    assert all(not o.detections_1 for o in stream if o.sample_index not in seen)
    right, wrong = process_stream(stream, None, DetectorConfig(use_ensemble=False))
    assert sum(right.values) == 5 and sum(wrong.values) == 0


def test_wrong_way_rider_is_detected_as_such():
    stream = render_sparse(single_rider(Direction.WRONG_WAY, lateral=-40.0), 2.0, 0.2)
    right, wrong = process_stream(stream, RecordedOracle.from_observations(stream))
    assert sum(right.values) == 0 and sum(wrong.values) == 5


def test_counts_equal_unique_riders_without_persistence():
    cfg = noise_free(ScenarioConfig(duration=600.0, arrival_rate_r=4.0, arrival_rate_w=2.0,
                                    speed_std=0.0, turnoff_rate=0.0, seed=3))
    sc = generate_scenario(cfg)
    # dwell is 10 s, so with 12 s between samples no rider is seen twice
    stream = render_sparse(sc, 12.0, 0.2)
    right, wrong = process_stream(stream, None, DetectorConfig(use_ensemble=False))
    in_both = [[v for v in sc.visible_at(o.t_k) if v.visible(o.frame_time(2))] for o in stream]
    assert [r + w for r, w in zip(right.values, wrong.values)] == [len(vs) for vs in in_both]
    n_wrong = sum(1 for vs in in_both for v in vs if v.direction is Direction.WRONG_WAY)
    assert sum(wrong.values) == n_wrong
    assert n_wrong > 0 and sum(right.values) > 0


def test_render_is_reproducible():
    sc = generate_scenario(ScenarioConfig(duration=120.0, seed=9))
    assert render_sparse(sc, 2.0, 0.2) == render_sparse(sc, 2.0, 0.2)
    assert render_dense(sc) == render_dense(sc)


def test_dense_frame_count():
    frames = render_dense(single_rider(), 0.17)
    assert len(frames) == math.ceil(60.0 / 0.17) == frame_count(60.0, 0.17)
    assert frame_count(60.0, 2.0) == 30
    visible = [f.frame_index for f in frames if f.vehicle_ids == (0,)]
    assert visible == [i for i in range(len(frames)) if 3.0 <= i * 0.17 < 13.0]


def test_sparse_needs_gap_above_pair_spacing():
    with pytest.raises(InvalidParameterError):
        render_sparse(single_rider(), 0.2, 0.2)


# ─────────── oracle ───────────
def test_noise_free_oracle_returns_true_heading():
    sc = single_rider(Direction.WRONG_WAY, lateral=-40.0)
    oracle = noisy_oracle(sc)
    v = sc.vehicles[0]
    for t in (3.5, 6.0, 12.9):
        assert cyclic_error(oracle.orientation(t, v.box_at(t)), math.pi) < 1e-12


def test_flipping_oracle_agrees_two_thirds_of_the_time():
    cfg = replace(QUIET, duration=600.0, oracle_flip=0.9999)
    vehicles = [make_vehicle(cfg, i, Direction.RIGHT_WAY, float(i), 4.0, 40.0) for i in range(300)]
    oracle = noisy_oracle(Scenario.from_vehicles(cfg, vehicles))
    hits = [cyclic_error(oracle.heading(i, i + 0.1 * j), 0.0) < 2 * math.pi / 3
            for i in range(300) for j in range(10)]
    assert np.mean(hits) == pytest.approx(2 / 3, abs=0.04)


def test_oracle_answers_do_not_depend_on_query_order():
    sc = generate_scenario(ScenarioConfig(duration=120.0, seed=5))
    oracle = noisy_oracle(sc)
    ids = [v.vehicle_id for v in sc.vehicles[:20]]
    first = [oracle.heading(i, 10.0) for i in ids]
    second = [oracle.heading(i, 10.0) for i in reversed(ids)][::-1]
    assert first == second
