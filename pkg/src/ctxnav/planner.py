"""Global grid search and the sampling-based multi-objective local planner."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import UnreachableGoalError
from .geom import CircleFit, Point2D, as_xy
from .paccet import select_best
from .social import (
    ActivityZone,
    CorridorFrame,
    ObjectiveId,
    activity_space_cost,
    clearance_cost,
    goal_distance_cost,
    in_zones,
    o_space_cost,
    path_alignment_cost,
    personal_space_cost,
    right_side_cost,
)
from .world import DT, ROBOT_RADIUS, OccupancyGrid, Pose2D, Velocity, inflate, step_kinematics, step_kinematics_batch

RECOVERY = Velocity(0.0, 0.5)


@dataclass(frozen=True)
class PlannerConfig:
    v_min: float = 0.0
    v_max: float = 0.6
    omega_min: float = -1.0
    omega_max: float = 1.0
    accel_v: float = 0.5
    accel_omega: float = 1.5
    samples_v: int = 11
    samples_omega: int = 21
    horizon: float = 2.0
    dt: float = DT
    control_dt: float = DT
    lookahead: float = 1.5
    person_clearance: float = 0.3
    # "index" reproduces plain lowest-index tie-breaking among equal fitness
    tie_break: str = "utopia"

    def __post_init__(self):
        if self.samples_v < 2 or self.samples_omega < 2:
            raise ValueError("need at least 2 samples per control axis")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ValueError("horizon must be a positive multiple of dt")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


# ---------------------------------------------------------------------------
# global planning

_SQRT2 = math.sqrt(2.0)
_MOVES = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def plan_global(grid: OccupancyGrid, start: Point2D, goal: Point2D) -> list[Point2D]:
    """8-connected A* over the inflated grid with an octile heuristic.

    Diagonal moves may not cut a blocked corner. Open-list ties are broken
    by ``(f, h, cell index)``. Returns cell centres from start to goal.
    """
    blocked = grid.inflated
    h_, w_ = blocked.shape
    sr, sc = (int(v) for v in grid.cell_of(start.x, start.y))
    gr, gc = (int(v) for v in grid.cell_of(goal.x, goal.y))

    def free(r, c):
        return 0 <= r < h_ and 0 <= c < w_ and not blocked[r, c]

    if not free(gr, gc):
        raise UnreachableGoalError(f"goal ({goal.x:.2f}, {goal.y:.2f}) is not in free space")
    if not free(sr, sc):
        raise UnreachableGoalError(f"start ({start.x:.2f}, {start.y:.2f}) is not in free space")

    res = grid.resolution

    def heuristic(r, c):
        dr, dc = abs(r - gr), abs(c - gc)
        return res * (max(dr, dc) + (_SQRT2 - 1.0) * min(dr, dc))

    start_idx, goal_idx = sr * w_ + sc, gr * w_ + gc
    g = {start_idx: 0.0}
    parent = {start_idx: -1}
    h0 = heuristic(sr, sc)
    heap = [(h0, h0, start_idx)]
    closed = set()
    while heap:
        _, _, idx = heapq.heappop(heap)
        if idx in closed:
            continue
        if idx == goal_idx:
            break
        closed.add(idx)
        r, c = divmod(idx, w_)
        for dr, dc in _MOVES:
            nr, nc = r + dr, c + dc
            if not free(nr, nc):
                continue
            if dr and dc and not (free(r + dr, c) and free(r, c + dc)):
                continue
            nidx = nr * w_ + nc
            if nidx in closed:
                continue
            ng = g[idx] + (res * _SQRT2 if dr and dc else res)
            if ng < g.get(nidx, math.inf) - 1e-12:
                g[nidx] = ng
                parent[nidx] = idx
                nh = heuristic(nr, nc)
                heapq.heappush(heap, (ng + nh, nh, nidx))
    else:
        raise UnreachableGoalError(f"no path to ({goal.x:.2f}, {goal.y:.2f})")
    if goal_idx not in parent:
        raise UnreachableGoalError(f"no path to ({goal.x:.2f}, {goal.y:.2f})")

    cells = []
    idx = goal_idx
    while idx != -1:
        cells.append(divmod(idx, w_))
        idx = parent[idx]
    return [grid.cell_center(r, c) for r, c in reversed(cells)]


def social_layer(grid: OccupancyGrid, zones: Sequence[ActivityZone] = (), circle: CircleFit | None = None,
                 margin: float = ROBOT_RADIUS, interior: float = 0.75) -> OccupancyGrid:
    """Copy of ``grid`` with activity zones and the O-space interior blocked for search.

    Zones grow by ``margin``; the O-space is the disc of ``interior`` times the
    group radius, so a slot on the circle itself stays reachable.
    """
    if not zones and circle is None:
        return grid
    cols, rows = np.meshgrid(np.arange(grid.width), np.arange(grid.height))
    xy = np.stack([grid.origin.x + (cols + 0.5) * grid.resolution,
                   grid.origin.y + (rows + 0.5) * grid.resolution], axis=-1)
    mask = np.zeros(grid.inflated.shape, dtype=bool)
    if zones:
        mask |= inflate(in_zones(xy, zones), margin, grid.resolution)
    if circle is not None:
        d = np.hypot(xy[..., 0] - circle.center.x, xy[..., 1] - circle.center.y)
        mask |= d < interior * circle.radius
    return replace(grid, inflated=grid.inflated | mask)


def path_length(path: Sequence) -> float:
    xy = as_xy(path)
    return float(np.hypot(*np.diff(xy, axis=0).T).sum()) if len(xy) > 1 else 0.0


def nearest_free(grid: OccupancyGrid, point: Point2D, max_radius: float = 1.0) -> Point2D | None:
    """Closest free inflated-grid cell centre to ``point`` within ``max_radius``."""
    if bool(grid.is_free(point.x, point.y)):
        return point
    r0, c0 = (int(v) for v in grid.cell_of(point.x, point.y))
    reach = int(math.ceil(max_radius / grid.resolution))
    rows = np.arange(r0 - reach, r0 + reach + 1)
    cols = np.arange(c0 - reach, c0 + reach + 1)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    ok = (rr >= 0) & (cc >= 0) & (rr < grid.height) & (cc < grid.width)
    rr, cc = rr[ok], cc[ok]
    free = ~grid.inflated[rr, cc]
    if not free.any():
        return None
    rr, cc = rr[free], cc[free]
    d2 = (rr - r0) ** 2 + (cc - c0) ** 2
    order = np.lexsort((cc, rr, d2))
    best = order[0]
    if math.sqrt(d2[best]) * grid.resolution > max_radius:
        return None
    return grid.cell_center(int(rr[best]), int(cc[best]))


def nearest_vertex(path: Sequence, pose, start: int = 0) -> int:
    xy = as_xy(path)[start:]
    return start + int(np.argmin(np.hypot(xy[:, 0] - pose.x, xy[:, 1] - pose.y)))


def carrot(path: Sequence, pose, lookahead: float, start: int = 0) -> Point2D:
    """First vertex at least ``lookahead`` of arc length past the nearest one.

    The nearest-vertex search begins at ``start``, so the carrot never
    moves backward along the path.
    """
    if len(path) == 0:
        raise ValueError("carrot needs a non-empty path")
    xy = as_xy(path)
    k = nearest_vertex(path, pose, start)
    seg = np.hypot(*np.diff(xy[k:], axis=0).T)
    arc = np.cumsum(seg)
    ahead = np.nonzero(arc >= lookahead - 1e-12)[0]
    j = k + 1 + int(ahead[0]) if len(ahead) else len(xy) - 1
    return Point2D(*xy[j])


# ---------------------------------------------------------------------------
# local planning


def sample_controls(current: Velocity, cfg: PlannerConfig = PlannerConfig()) -> np.ndarray:
    """Grid over the dynamic window, rows ``(v, omega)``; v outer, omega inner."""

    def window(value, accel, lo, hi):
        a = min(max(value - accel * cfg.control_dt, lo), hi)
        b = max(min(value + accel * cfg.control_dt, hi), lo)
        return a, b

    v_lo, v_hi = window(current.v, cfg.accel_v, cfg.v_min, cfg.v_max)
    w_lo, w_hi = window(current.omega, cfg.accel_omega, cfg.omega_min, cfg.omega_max)
    vs = np.linspace(v_lo, v_hi, cfg.samples_v)
    ws = np.linspace(w_lo, w_hi, cfg.samples_omega)
    vv, ww = np.meshgrid(vs, ws, indexing="ij")
    return np.column_stack([vv.ravel(), ww.ravel()])


def rollout(pose: Pose2D, control, cfg: PlannerConfig = PlannerConfig()) -> list[Pose2D]:
    cmd = control if isinstance(control, Velocity) else Velocity(float(control[0]), float(control[1]))
    out = []
    p = pose
    for _ in range(cfg.steps):
        p = step_kinematics(p, cmd, cfg.dt)
        out.append(p)
    return out


def rollout_batch(pose: Pose2D, controls: np.ndarray, cfg: PlannerConfig = PlannerConfig()) -> np.ndarray:
    """``(N, T, 3)`` poses for every control, stepping the exact integrator."""
    n = len(controls)
    v, w = controls[:, 0], controls[:, 1]
    x = np.full(n, pose.x)
    y = np.full(n, pose.y)
    th = np.full(n, pose.theta)
    out = np.empty((n, cfg.steps, 3))
    for k in range(cfg.steps):
        x, y, th = step_kinematics_batch(x, y, th, v, w, cfg.dt)
        out[:, k, 0], out[:, k, 1], out[:, k, 2] = x, y, th
    return out


def validate_batch(poses: np.ndarray, grid: OccupancyGrid, tracks: Sequence,
                   cfg: PlannerConfig = PlannerConfig()) -> np.ndarray:
    p = np.asarray(poses)
    ok = grid.is_free(p[..., 0], p[..., 1]).all(axis=-1)
    xy = as_xy(tracks)
    if len(xy):
        d2 = ((p[..., None, :2] - xy) ** 2).sum(axis=-1)
        ok &= d2.min(axis=(-1, -2)) >= cfg.person_clearance**2
    return ok


def validate(poses, grid: OccupancyGrid, tracks: Sequence, cfg: PlannerConfig = PlannerConfig()) -> bool:
    """Every pose free in the inflated grid and clear of every track."""
    from .social import pose_array

    return bool(validate_batch(pose_array(poses)[None], grid, tracks, cfg)[0])


@dataclass
class PlanningSnapshot:
    """Immutable per-tick inputs shared by every candidate evaluation."""

    grid: OccupancyGrid
    local_goal: Point2D
    global_path: Sequence[Point2D] = ()
    tracks: Sequence = ()
    zones: Sequence[ActivityZone] = ()
    corridor: CorridorFrame | None = None
    circle: CircleFit | None = None


def score_candidates(poses: np.ndarray, objectives: Sequence[ObjectiveId], snap: PlanningSnapshot
                     ) -> tuple[np.ndarray, list[str]]:
    """Objective matrix ``(N, len(objectives))`` in the given order."""
    n = len(poses)
    events: list[str] = []
    cols = []
    for obj in objectives:
        if obj in (ObjectiveId.GoalDistance, ObjectiveId.SocialGoal):
            col = goal_distance_cost(poses, snap.local_goal)
        elif obj is ObjectiveId.PathAlignment:
            col = path_alignment_cost(poses, snap.global_path)
        elif obj is ObjectiveId.Clearance:
            col = clearance_cost(poses, snap.grid)
        elif obj is ObjectiveId.PersonalSpace:
            col = personal_space_cost(poses, snap.tracks)
        elif obj is ObjectiveId.ActivitySpace:
            col = activity_space_cost(poses, snap.zones)
        elif obj is ObjectiveId.RightSide:
            if snap.corridor is None:
                events.append("no_corridor")
            col = right_side_cost(poses, snap.corridor)
        elif obj is ObjectiveId.OSpace:
            if snap.circle is None:
                events.append("no_group_circle")
                col = np.zeros(n)
            else:
                col = o_space_cost(poses, snap.circle)
        else:  # pragma: no cover
            raise ValueError(f"unknown objective {obj}")
        cols.append(np.broadcast_to(np.asarray(col, dtype=float), (n,)))
    return np.column_stack(cols) if cols else np.zeros((n, 0)), events


@dataclass
class LocalPlan:
    command: Velocity
    objectives: tuple[ObjectiveId, ...]
    controls: np.ndarray
    poses: np.ndarray
    valid: np.ndarray
    values: np.ndarray | None = None
    fitness: np.ndarray | None = None
    chosen: int | None = None
    events: list[str] = field(default_factory=list)

    @property
    def chosen_fitness(self) -> float | None:
        if self.chosen is None:
            return None
        return float(self.fitness[list(np.nonzero(self.valid)[0]).index(self.chosen)])

    @property
    def chosen_values(self) -> np.ndarray | None:
        if self.chosen is None:
            return None
        return self.values[list(np.nonzero(self.valid)[0]).index(self.chosen)]

    @property
    def certified(self) -> bool:
        """Chosen fitness is no worse than any other valid candidate's."""
        return self.chosen is None or self.chosen_fitness <= float(self.fitness.min())


def plan_local(pose: Pose2D, current: Velocity, objectives: Sequence[ObjectiveId], snap: PlanningSnapshot,
               cfg: PlannerConfig = PlannerConfig()) -> LocalPlan:
    """Sample, roll out, discard collisions, score, and pick by gauge fitness.

    With no valid candidate the robot rotates in place and the plan
    carries a ``no_valid_candidates`` event.
    """
    objectives = tuple(objectives)
    controls = sample_controls(current, cfg)
    poses = rollout_batch(pose, controls, cfg)
    valid = validate_batch(poses, snap.grid, snap.tracks, cfg)
    plan = LocalPlan(RECOVERY, objectives, controls, poses, valid)
    if not valid.any():
        plan.events.append("no_valid_candidates")
        return plan
    idx = np.nonzero(valid)[0]
    values, events = score_candidates(poses[idx], objectives, snap)
    plan.events.extend(events)
    selection = select_best(values, tie_break=cfg.tie_break)
    chosen = int(idx[selection.index])
    plan.values = values
    plan.fitness = selection.fitness
    plan.chosen = chosen
    plan.command = Velocity(float(controls[chosen, 0]), float(controls[chosen, 1]))
    return plan
