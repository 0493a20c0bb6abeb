import csv
import io
import json
import math

import pytest

from ctxnav.context import TRADITIONAL_OBJECTIVES, ContextLabel
from ctxnav.errors import InvalidInputError, UnreachableGoalError
from ctxnav.geom import Point2D
from ctxnav.sim import (
    TRACE_HEADER,
    RunMetrics,
    SimConfig,
    TickRecord,
    compute_metrics,
    format_trace,
    run_simulation,
    trace_labels,
)
from ctxnav.social import ObjectiveId
from ctxnav.world import Pose2D, Velocity, parse_scenario

ALL_RUNS = [(n, m) for n in ("empty", "hallway", "gallery", "queue", "oformation") for m in ("social", "traditional")]


def _record(tick, context=ContextLabel.Other, dist=math.inf):
    # parked at the empty room's start pose
    return TickRecord(tick, Pose2D(1.0, 2.0, 0.0), Velocity(), context, TRADITIONAL_OBJECTIVES, 1.0,
                      {ObjectiveId.GoalDistance: 0.5, ObjectiveId.Clearance: 0.0}, dist)


def test_empty_room_reaches_goal(sim_run):
    records, metrics = sim_run("empty")
    assert metrics.success
    # the run stops within the arrival radius, so the path may end just short of 3 m
    assert 3.0 - SimConfig().success_radius <= metrics.path_length <= 3.6
    assert metrics.min_person_distance == math.inf
    assert metrics.duration == pytest.approx(len(records) * 0.1)


@pytest.mark.parametrize("name, mode", ALL_RUNS)
def test_record_invariants(sim_run, name, mode):
    records, metrics = sim_run(name, mode)
    assert [r.tick for r in records] == list(range(len(records)))
    for r in records:
        if mode == "traditional":
            assert r.active_objectives == TRADITIONAL_OBJECTIVES
        assert set(r.objective_values) <= set(r.active_objectives)
        if "no_valid_candidates" not in r.events:
            assert r.min_person_distance >= 0.3
            assert set(r.objective_values) == set(r.active_objectives)
    for key, value in metrics.to_dict().items():
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            assert value >= 0, key


def test_replay_is_byte_identical(scenario):
    a, ma = run_simulation(scenario("hallway"), seed=3)
    b, mb = run_simulation(scenario("hallway"), seed=3)
    assert format_trace(a) == format_trace(b)
    assert ma.to_json() == mb.to_json()


def test_metrics_examples(scenario):
    s = scenario("empty")
    still = [_record(t) for t in range(5)]
    m = compute_metrics(still, s)
    assert m.path_length == 0.0 and m.personal_space_violation_time == 0.0 and m.context_switches == 0
    labels = [ContextLabel.Other] * 3 + [ContextLabel.Hallway] * 2 + [ContextLabel.Other]
    m = compute_metrics([_record(t, context=c) for t, c in enumerate(labels)], s)
    assert m.context_switches == 2
    with pytest.raises(InvalidInputError):
        compute_metrics([], s)


def test_violation_time_counts_close_ticks(scenario):
    recs = [_record(t, dist=d) for t, d in enumerate([1.0, 0.4, 0.3, 0.5, 0.44])]
    assert compute_metrics(recs, scenario("empty")).personal_space_violation_time == pytest.approx(0.3)


def test_metrics_json_round_numbers():
    m = RunMetrics(True, 1 / 3, 2.0, math.inf, 0.0, 0.0, 1, (1.0, 2.0), (1.0, 2.0))
    doc = json.loads(m.to_json())
    assert doc["min_person_distance"] is None
    assert doc["path_length"] == 0.333333333
    assert list(doc) == sorted(doc)


def test_trace_format(sim_run):
    records, _ = sim_run("hallway")
    text = format_trace(records)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == TRACE_HEADER
    assert rows[0][:8] == ["tick", "x", "y", "theta", "v", "omega", "context", "fitness"]
    assert rows[0][-2:] == ["min_person_dist", "events"]
    assert len(rows) == len(records) + 1
    col = {name: i for i, name in enumerate(rows[0])}
    first = rows[1]
    assert first[col["obj:ActivitySpace"]] == ""
    assert first[col["obj:GoalDistance"]] != ""
    digits = first[col["x"]].replace("-", "").replace(".", "").lstrip("0")
    assert len(digits) <= 9


def test_trace_labels_collapse():
    labels = [ContextLabel.Other, ContextLabel.Other, ContextLabel.Hallway, ContextLabel.Other]
    assert trace_labels([_record(t, context=c) for t, c in enumerate(labels)]) == [
        ContextLabel.Other, ContextLabel.Hallway, ContextLabel.Other]


def test_bad_arguments(scenario):
    with pytest.raises(InvalidInputError):
        run_simulation(scenario("empty"), mode="polite")
    with pytest.raises(InvalidInputError):
        run_simulation(scenario("empty"), max_ticks=0)


def test_unreachable_goal_surfaces():
    s = parse_scenario({
        "schema": 1, "bounds": [0, 0, 6, 4],
        "obstacles": [{"type": "wall", "start": [3, 0], "end": [3, 4]}],
        "robot": {"start": [1, 2, 0], "goal": [5, 2]},
    })
    with pytest.raises(UnreachableGoalError):
        run_simulation(s)


def test_max_ticks_bounds_run(scenario):
    records, metrics = run_simulation(scenario("hallway"), max_ticks=7)
    assert len(records) == 7 and not metrics.success


def test_teleop_follows_script(sim_run, scenario):
    records, _ = sim_run("timeline")
    s = scenario("timeline")
    assert len(records) == round(s.teleop.end_time / 0.1)
    for r in records[::40]:
        target = s.teleop.at((r.tick + 1) * 0.1)
        assert r.robot.point.distance_to(target) < 1e-6


def test_social_goal_adopted_in_formations(sim_run):
    records, metrics = sim_run("queue")
    goals = [r.social_goal for r in records if r.social_goal is not None]
    assert goals and records[-1].context is ContextLabel.Queue
    assert Point2D(*metrics.active_goal) == records[-1].active_goal
