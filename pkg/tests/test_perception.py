import itertools
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxnav.geom import Point2D
from ctxnav.perception import ClusterConfig, PersonTrack, Tracker, TrackerConfig, cluster_scan, detect_people, update_tracks
from ctxnav.world import PERSON_RADIUS, Pose2D, parse_scenario, rasterize, simulate_scan


def _grid(obstacles=()):
    return rasterize(parse_scenario({
        "schema": 1, "bounds": [-10, -10, 10, 10], "obstacles": list(obstacles),
        "robot": {"start": [0, 0, 0], "goal": [1, 0]},
    }))


EMPTY = _grid()


def test_one_person_one_cluster():
    pose = Pose2D(0, 0, 0)
    scan = simulate_scan(EMPTY, [Point2D(2, 0)], pose)
    clusters = cluster_scan(scan, pose)
    assert len(clusters) == 1
    # near-side returns sit about pi*r/4 in front of the centre, never beyond r
    assert np.hypot(*(clusters[0].mean(axis=0) - (2, 0))) <= PERSON_RADIUS
    (det,) = detect_people(scan, pose)
    assert det.distance_to(Point2D(2, 0)) <= 0.15
    assert det.distance_to(Point2D(2, 0)) < 0.02


def test_empty_world_no_clusters():
    pose = Pose2D(0, 0, 0)
    assert cluster_scan(simulate_scan(EMPTY, [], pose), pose) == []


def test_long_wall_rejected_by_diameter():
    g = _grid([{"type": "wall", "start": [2, -4], "end": [2, 4]}])
    pose = Pose2D(0, 0, 0)
    assert cluster_scan(simulate_scan(g, [], pose), pose) == []


def test_close_person_still_detected():
    pose = Pose2D(0, 0, 0)
    scan = simulate_scan(EMPTY, [Point2D(0.5, 0)], pose)
    assert len(detect_people(scan, pose, ClusterConfig())) == 1


def test_detection_error_across_ranges_and_bearings():
    pose = Pose2D(0.3, -0.2, 0.4)
    for r in (0.6, 1.5, 3.0, 5.0):
        for bearing in (-1.5, -0.5, 0.0, 0.9):
            true = Point2D(pose.x + r * math.cos(pose.theta + bearing), pose.y + r * math.sin(pose.theta + bearing))
            (det,) = detect_people(simulate_scan(EMPTY, [true], pose), pose)
            assert det.distance_to(true) < 0.05


def test_tracker_examples():
    cfg = TrackerConfig()
    track = PersonTrack(7, Point2D(2, 0), (0.0, 0.0), 0, 1)
    (kept,), _ = update_tracks([track], [Point2D(2.1, 0)], 1, 8, cfg)
    assert kept.id == 7 and kept.position == Point2D(2.1, 0)
    tracks, next_id = update_tracks([track], [Point2D(3.0, 0)], 1, 8, cfg)
    assert {t.id for t in tracks} == {7, 8} and next_id == 9


def test_crossing_assignment_is_greedy_nearest_first():
    a = PersonTrack(0, Point2D(0, 0), (0.0, 0.0), 0, 1)
    b = PersonTrack(1, Point2D(0.6, 0), (0.0, 0.0), 0, 1)
    dets = [Point2D(0.35, 0.0), Point2D(0.05, 0.0)]
    tracks, _ = update_tracks([a, b], dets, 1, 2)
    pos = {t.id: t.position for t in tracks}
    chosen = pos[0].distance_to(a.position) + pos[1].distance_to(b.position)
    for perm in itertools.permutations(dets):
        alt = perm[0].distance_to(a.position) + perm[1].distance_to(b.position)
        assert chosen <= alt + 1e-12
    # the closest pair (track a, detection 2) is fixed first
    assert pos[0] == dets[1]


def test_stale_tracks_expire_and_ids_never_reused():
    tr = Tracker(TrackerConfig(timeout=2))
    tr.update([Point2D(0, 0)], 0)
    for tick in range(1, 4):
        tr.update([], tick)
    assert tr.tracks == []
    (fresh,) = tr.update([Point2D(0, 0)], 4)
    assert fresh.id == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), max_size=5), min_size=1, max_size=8))
def test_tracker_invariants(frames):
    tr = Tracker()
    seen_ids = set()
    prev_live = 0
    for tick, frame in enumerate(frames):
        dets = [Point2D(x, y) for x, y in frame]
        tracks = tr.update(dets, tick)
        ids = [t.id for t in tracks]
        assert len(ids) == len(set(ids))
        assert len(tracks) <= len(dets) + prev_live
        new = {t.id for t in tracks if t.age == 0}
        assert not (new & seen_ids)
        seen_ids |= set(ids)
        prev_live = len(tracks)


def test_stationary_people_tracked_within_radius():
    people = [Point2D(2, 1), Point2D(3, -1), Point2D(-2, 0.5)]
    pose = Pose2D(0, 0, 0.2)
    tr = Tracker()
    for tick in range(3):
        tracks = tr.update(detect_people(simulate_scan(EMPTY, people, pose), pose), tick)
    for t in tracks:
        assert min(t.position.distance_to(p) for p in people) <= 0.2
