"""Social goals and per-trajectory objective costs.

Cost functions take poses as an array of shape ``(..., T, >=2)`` (x, y
in the last axis, leading axes for batches of candidates) and reduce the
``T`` axis, so one call scores a whole candidate set. A plain list of
:class:`Pose2D` is also accepted.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, SingularFitError
from .geom import CircleFit, Point2D, as_xy, best_fit_circle, principal_axis, wrap_angle
from .world import OccupancyGrid, Pose2D

PERSONAL_SIGMA = 0.45
QUEUE_SPACING = 0.8
ZONE_HALF_WIDTH = 0.5
SAFE_DISTANCE = 1.0


class ObjectiveId(enum.IntEnum):
    GoalDistance = 0
    PathAlignment = 1
    Clearance = 2
    PersonalSpace = 3
    ActivitySpace = 4
    RightSide = 5
    OSpace = 6
    SocialGoal = 7


class SocialGoalKind(enum.Enum):
    QueueEnd = "queue_end"
    OFormationSlot = "oformation_slot"


@dataclass(frozen=True)
class SocialGoal:
    pose: Pose2D
    kind: SocialGoalKind
    circle: CircleFit | None = None


@dataclass(frozen=True)
class ActivityZone:
    polygon: tuple[Point2D, Point2D, Point2D, Point2D]

    @property
    def array(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.polygon])


def pose_array(poses) -> np.ndarray:
    if isinstance(poses, np.ndarray):
        return poses
    return np.array([(p.x, p.y, p.theta) for p in poses], dtype=float).reshape(-1, 3)


# ---------------------------------------------------------------------------
# social goals


def queue_goal(tracks: Sequence, machine: Point2D | None, robot: Pose2D,
               spacing: float = QUEUE_SPACING) -> SocialGoal:
    """Spot ``spacing`` behind the last person, facing the queue front.

    The front is the line endpoint nearest the machine, or, with no
    machine, the endpoint farthest from the robot.
    """
    xy = as_xy(tracks)
    if len(xy) < 2:
        raise DegenerateInputError("a queue needs at least 2 tracks")
    centroid, axis = principal_axis(xy)
    s = (xy - centroid) @ axis
    lo, hi = centroid + s.min() * axis, centroid + s.max() * axis
    if np.hypot(*(hi - lo)) < 1e-9:
        raise DegenerateInputError("queue tracks are coincident")
    if machine is not None:
        m = np.array([machine.x, machine.y])
        front_is_lo = np.hypot(*(lo - m)) <= np.hypot(*(hi - m))
    else:
        r = np.array([robot.x, robot.y])
        front_is_lo = np.hypot(*(lo - r)) >= np.hypot(*(hi - r))
    front, back = (lo, hi) if front_is_lo else (hi, lo)
    direction = (back - front) / np.hypot(*(back - front))
    goal = back + spacing * direction
    facing = math.atan2(-direction[1], -direction[0])
    return SocialGoal(Pose2D(float(goal[0]), float(goal[1]), facing), SocialGoalKind.QueueEnd)


def oformation_goal(tracks: Sequence, robot: Pose2D, tie_tolerance: float = math.radians(1.0)) -> SocialGoal:
    """Open slot on the group's circle: middle of the widest angular gap.

    Gaps within ``tie_tolerance`` of the widest are resolved toward the
    robot's bearing from the circle centre.
    """
    xy = as_xy(tracks)
    if len(xy) < 3:
        raise DegenerateInputError("an O-formation needs at least 3 tracks")
    try:
        circle = best_fit_circle(xy)
    except SingularFitError as exc:
        raise DegenerateInputError(f"collinear group: {exc}") from exc
    cx, cy = circle.center.x, circle.center.y
    angles = np.sort(np.mod(np.arctan2(xy[:, 1] - cy, xy[:, 0] - cx), 2.0 * math.pi))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * math.pi]]))
    mids = angles + 0.5 * gaps
    bearing = math.atan2(robot.y - cy, robot.x - cx)
    best = None
    for gap, mid in zip(gaps, mids):
        if gap < gaps.max() - tie_tolerance:
            continue
        off = abs(wrap_angle(mid - bearing))
        if best is None or off < best[0] - 1e-12:
            best = (off, mid)
    mid = best[1]
    gx, gy = cx + circle.radius * math.cos(mid), cy + circle.radius * math.sin(mid)
    facing = math.atan2(cy - gy, cx - gx)
    return SocialGoal(Pose2D(gx, gy, facing), SocialGoalKind.OFormationSlot, circle)


def activity_zone(spectator, artwork: Point2D, half_width: float = ZONE_HALF_WIDTH) -> ActivityZone:
    """Rectangle spanning spectator to artwork, ``half_width`` to each side."""
    s = getattr(spectator, "position", spectator)
    ax, ay = artwork.x - s.x, artwork.y - s.y
    length = math.hypot(ax, ay)
    if length <= 0.1:
        raise DegenerateInputError(f"spectator is {length:.3f} m from the artwork")
    nx, ny = -ay / length * half_width, ax / length * half_width
    return ActivityZone((
        Point2D(s.x + nx, s.y + ny), Point2D(artwork.x + nx, artwork.y + ny),
        Point2D(artwork.x - nx, artwork.y - ny), Point2D(s.x - nx, s.y - ny),
    ))


def activity_zones_for(persons: Sequence, artworks: Sequence[Point2D], max_distance: float = 3.0,
                       half_width: float = ZONE_HALF_WIDTH) -> list[ActivityZone]:
    """One zone per person standing within ``max_distance`` of an artwork (nearest one)."""
    zones = []
    if not artworks:
        return zones
    for person in persons:
        pos = getattr(person, "position", person)
        dists = [a.distance_to(pos) for a in artworks]
        i = int(np.argmin(dists))
        if 0.1 < dists[i] <= max_distance:
            zones.append(activity_zone(pos, artworks[i], half_width))
    return zones


# ---------------------------------------------------------------------------
# costs


def personal_space_cost(poses, tracks: Sequence, sigma: float = PERSONAL_SIGMA):
    """Worst-pose sum of Gaussian intrusions ``exp(-d^2 / 2 sigma^2)``."""
    p = pose_array(poses)[..., :2]
    xy = as_xy(tracks)
    if len(xy) == 0:
        return np.zeros(p.shape[:-2]) if p.ndim > 2 else 0.0
    d2 = ((p[..., None, :] - xy) ** 2).sum(axis=-1)
    intrusion = np.exp(-d2 / (2.0 * sigma * sigma)).sum(axis=-1)
    return intrusion.max(axis=-1)


def _inside_convex(p: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    n = len(polygon)
    signs = []
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        signs.append((b[0] - a[0]) * (p[..., 1] - a[1]) - (b[1] - a[1]) * (p[..., 0] - a[0]))
    s = np.stack(signs, axis=-1)
    tol = 1e-12
    return np.all(s >= -tol, axis=-1) | np.all(s <= tol, axis=-1)


def in_zones(points: np.ndarray, zones: Sequence[ActivityZone]) -> np.ndarray:
    """Boolean mask: point inside (or on the boundary of) any zone."""
    pts = np.asarray(points, dtype=float)[..., :2]
    inside = np.zeros(pts.shape[:-1], dtype=bool)
    for zone in zones:
        inside |= _inside_convex(pts, zone.array)
    return inside


def activity_space_cost(poses, zones: Sequence[ActivityZone]):
    """Fraction of poses inside any activity zone."""
    p = pose_array(poses)
    if not zones:
        return np.zeros(p.shape[:-2]) if p.ndim > 2 else 0.0
    return in_zones(p, zones).mean(axis=-1)


@dataclass(frozen=True)
class CorridorFrame:
    center: np.ndarray
    axis: np.ndarray
    width: float

    def lateral(self, xy: np.ndarray) -> np.ndarray:
        """Signed offset from the centreline, positive to the left of travel."""
        normal = np.array([-self.axis[1], self.axis[0]])
        return (np.asarray(xy)[..., :2] - self.center) @ normal


def corridor_frame(polygon, travel_dir) -> CorridorFrame:
    """Major axis of the corridor polygon, oriented along ``travel_dir``."""
    xy = as_xy(polygon)
    center, axis = principal_axis(xy)
    if float(np.dot(axis, np.asarray(travel_dir, dtype=float))) < 0:
        axis = -axis
    normal = np.array([-axis[1], axis[0]])
    across = (xy - center) @ normal
    return CorridorFrame(center, axis, float(across.max() - across.min()))


def right_side_cost(poses, corridor, travel_dir=(1.0, 0.0)):
    """Mean normalized lateral position: 0 at the right wall, 1 at the left.

    With no corridor the cost is 0; callers flag that case.
    """
    p = pose_array(poses)
    if corridor is None:
        return np.zeros(p.shape[:-2]) if p.ndim > 2 else 0.0
    frame = corridor if isinstance(corridor, CorridorFrame) else corridor_frame(corridor, travel_dir)
    lateral = frame.lateral(p)
    return np.clip((lateral + frame.width / 2.0) / frame.width, 0.0, 1.0).mean(axis=-1)


def o_space_cost(poses, circle: CircleFit):
    """Deepest penetration into the group circle, 1 at the centre, 0 outside."""
    p = pose_array(poses)[..., :2]
    if circle.radius <= 0:
        raise DegenerateInputError("O-space needs a positive radius")
    d = np.hypot(p[..., 0] - circle.center.x, p[..., 1] - circle.center.y)
    return np.maximum(0.0, 1.0 - d / circle.radius).max(axis=-1)


def goal_distance_cost(poses, goal: Point2D):
    p = pose_array(poses)
    final = p[..., -1, :2]
    return np.hypot(final[..., 0] - goal.x, final[..., 1] - goal.y)


def path_alignment_cost(poses, global_path: Sequence):
    p = pose_array(poses)[..., :2]
    path = as_xy(global_path)
    d2 = ((p[..., None, :] - path) ** 2).sum(axis=-1)
    return np.sqrt(d2.min(axis=-1)).mean(axis=-1)


def clearance_cost(poses, grid: OccupancyGrid, d_safe: float = SAFE_DISTANCE):
    """``max(0, 1 - d_min / d_safe)`` with ``d_min`` from the grid distance field."""
    p = pose_array(poses)
    d = grid.obstacle_distance(p[..., 0], p[..., 1])
    return np.maximum(0.0, 1.0 - d.min(axis=-1) / d_safe)


def base_costs(poses, local_goal: Point2D, global_path: Sequence, grid: OccupancyGrid,
               d_safe: float = SAFE_DISTANCE):
    """(GoalDistance, PathAlignment, Clearance) for one trajectory or a batch."""
    return (
        goal_distance_cost(poses, local_goal),
        path_alignment_cost(poses, global_path),
        clearance_cost(poses, grid, d_safe),
    )
