"""Person detection from laser scans and identity-stable tracking."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geom import Point2D
from .world import DT, PERSON_RADIUS, LaserScan, Pose2D


@dataclass(frozen=True)
class ClusterConfig:
    max_gap: float = 0.3
    min_points: int = 2
    # a 0.2 m disc spans ~100 beams at 0.45 m and ~200 at 0.26 m (512 beams / 270 deg)
    max_points: int = 200
    max_diameter: float = 0.7
    # returns off a disc of radius r average pi*r/4 in front of its centre
    center_offset: float = PERSON_RADIUS * np.pi / 4.0


@dataclass(frozen=True)
class TrackerConfig:
    gate: float = 0.5
    timeout: int = 10
    dt: float = DT


@dataclass(frozen=True)
class PersonTrack:
    id: int
    position: Point2D
    velocity: tuple[float, float]
    last_seen: int
    age: int


def scan_points(scan: LaserScan, pose: Pose2D) -> np.ndarray:
    """World-frame ``(n, 2)`` points for valid returns, in beam order."""
    keep = scan.valid
    angles = pose.theta + scan.angles[keep]
    r = scan.ranges[keep]
    return np.column_stack([pose.x + r * np.cos(angles), pose.y + r * np.sin(angles)])


def cluster_scan(scan: LaserScan, pose: Pose2D, config: ClusterConfig = ClusterConfig()) -> list[np.ndarray]:
    """Split the scan into person-sized clusters of adjacent returns.

    Consecutive valid beams join a cluster when their points are within
    ``max_gap``; a dropped beam (no return) always ends the cluster.
    """
    valid = scan.valid
    beam_idx = np.nonzero(valid)[0]
    if len(beam_idx) == 0:
        return []
    pts = scan_points(scan, pose)
    gaps = np.hypot(*np.diff(pts, axis=0).T)
    breaks = (gaps > config.max_gap) | (np.diff(beam_idx) > 1)
    starts = np.concatenate([[0], np.nonzero(breaks)[0] + 1])
    ends = np.concatenate([starts[1:], [len(pts)]])

    clusters = []
    for a, b in zip(starts, ends):
        n = b - a
        if not config.min_points <= n <= config.max_points:
            continue
        c = pts[a:b]
        diffs = c[:, None, :] - c[None, :, :]
        diameter = float(np.sqrt((diffs**2).sum(axis=2)).max())
        if diameter <= config.max_diameter:
            clusters.append(c)
    return clusters


def detect_people(scan: LaserScan, pose: Pose2D, config: ClusterConfig = ClusterConfig()) -> list[Point2D]:
    """Estimated person centres, ordered by beam angle.

    Each cluster centroid is pushed ``center_offset`` further along the ray
    from the sensor, since the scan only sees the near side of a person.
    """
    out = []
    for c in cluster_scan(scan, pose, config):
        m = c.mean(axis=0)
        ray = m - (pose.x, pose.y)
        dist = float(np.hypot(*ray))
        if dist > 1e-9:
            m = m + config.center_offset * ray / dist
        out.append(Point2D(*m))
    return out


class Tracker:
    """Greedy nearest-neighbour tracker.

    Pairs are associated in ascending distance order inside the gate;
    leftover detections open tracks with fresh ids (never reused), and
    tracks unseen for more than ``timeout`` ticks are dropped.
    """

    def __init__(self, config: TrackerConfig = TrackerConfig()):
        self.config = config
        self.tracks: list[PersonTrack] = []
        self._next_id = 0

    def update(self, detections: list[Point2D], tick: int) -> list[PersonTrack]:
        self.tracks, self._next_id = update_tracks(self.tracks, detections, tick, self._next_id, self.config)
        return self.tracks


def update_tracks(tracks: list[PersonTrack], detections: list[Point2D], tick: int, next_id: int,
                  config: TrackerConfig = TrackerConfig()) -> tuple[list[PersonTrack], int]:
    pairs = []
    for ti, tr in enumerate(tracks):
        for di, det in enumerate(detections):
            d = tr.position.distance_to(det)
            if d <= config.gate:
                pairs.append((d, ti, di))
    pairs.sort()

    used_t: set[int] = set()
    used_d: set[int] = set()
    updated: dict[int, PersonTrack] = {}
    for _, ti, di in pairs:
        if ti in used_t or di in used_d:
            continue
        used_t.add(ti)
        used_d.add(di)
        tr, det = tracks[ti], detections[di]
        elapsed = max(tick - tr.last_seen, 1) * config.dt
        vel = ((det.x - tr.position.x) / elapsed, (det.y - tr.position.y) / elapsed)
        updated[ti] = replace(tr, position=det, velocity=vel, last_seen=tick, age=tr.age + 1)

    out = []
    for ti, tr in enumerate(tracks):
        if ti in updated:
            out.append(updated[ti])
        elif tick - tr.last_seen <= config.timeout:
            out.append(replace(tr, age=tr.age + 1))
    for di, det in enumerate(detections):
        if di not in used_d:
            out.append(PersonTrack(next_id, det, (0.0, 0.0), tick, 0))
            next_id += 1
    return out, next_id
