"""Closed-loop simulation, run metrics and trace/metrics serialization."""

from __future__ import annotations

import functools
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .context import (
    ArbiterConfig,
    ContextArbiter,
    ContextLabel,
    ContextSmoother,
    LinearSvmModel,
    SvmConfig,
    TRADITIONAL_OBJECTIVES,
    select_objectives,
    synthetic_dataset,
    train_svm,
)
from .errors import DegenerateInputError, InvalidInputError, UnreachableGoalError
from .geom import Point2D, as_xy, wrap_angle
from .perception import ClusterConfig, Tracker, TrackerConfig, detect_people
from .planner import (
    PlannerConfig,
    PlanningSnapshot,
    carrot,
    nearest_free,
    nearest_vertex,
    plan_global,
    plan_local,
    social_layer,
)
from .social import (
    ObjectiveId,
    SocialGoal,
    activity_zones_for,
    corridor_frame,
    in_zones,
    oformation_goal,
    queue_goal,
)
from .world import DT, LaserConfig, Pose2D, Scenario, Velocity, rasterize, region_context, simulate_scan, step_kinematics

MODES = ("social", "traditional")
PERSONAL_SPACE = 0.45


@dataclass(frozen=True)
class SimConfig:
    planner: PlannerConfig = PlannerConfig()
    laser: LaserConfig = LaserConfig()
    cluster: ClusterConfig = ClusterConfig()
    tracker: TrackerConfig = TrackerConfig()
    arbiter: ArbiterConfig = ArbiterConfig()
    smoothing_window: int = 10
    success_radius: float = 0.3
    # the run ends on arrival: this close, or inside success_radius and nearly stopped
    arrival_radius: float = 0.1
    arrival_speed: float = 0.05
    replan_distance: float = 1.0
    goal_shift: float = 0.25
    zone_range: float = 3.0
    # an adopted social goal outlives its formation's visibility by this long
    hold_ticks: int = 50
    dt: float = DT


@dataclass
class TickRecord:
    tick: int
    robot: Pose2D
    command: Velocity
    context: ContextLabel
    active_objectives: tuple[ObjectiveId, ...]
    chosen_fitness: float | None
    objective_values: dict[ObjectiveId, float]
    min_person_distance: float
    events: list[str] = field(default_factory=list)
    active_goal: Point2D | None = None
    social_goal: SocialGoal | None = None


@dataclass
class RunMetrics:
    success: bool
    path_length: float
    duration: float
    min_person_distance: float
    personal_space_violation_time: float
    activity_zone_time: float
    context_switches: int
    final_position: tuple[float, float] = (0.0, 0.0)
    active_goal: tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> dict:
        d = {
            "success": bool(self.success),
            "path_length": _round(self.path_length),
            "duration": _round(self.duration),
            # JSON has no infinity; no person ever seen is written as null
            "min_person_distance": None if math.isinf(self.min_person_distance) else _round(self.min_person_distance),
            "personal_space_violation_time": _round(self.personal_space_violation_time),
            "activity_zone_time": _round(self.activity_zone_time),
            "context_switches": int(self.context_switches),
            "final_position": [_round(v) for v in self.final_position],
            "active_goal": [_round(v) for v in self.active_goal],
        }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _round(v: float) -> float:
    return float(f"{v:.9g}")


@functools.lru_cache(maxsize=4)
def default_model(seed: int = 0) -> LinearSvmModel:
    """Formation classifier trained on the standard synthetic set."""
    samples = synthetic_dataset(170, 0.05, seed=seed)
    return train_svm([s for s, _ in samples], [lab for _, lab in samples], SvmConfig(seed=seed))


def _min_distance(pose, persons: Sequence) -> float:
    xy = as_xy(persons)
    if len(xy) == 0:
        return math.inf
    return float(np.hypot(xy[:, 0] - pose.x, xy[:, 1] - pose.y).min())


def _social_goal(label: ContextLabel, group: list, machines: Sequence[Point2D], robot: Pose2D) -> SocialGoal:
    if label is ContextLabel.Queue:
        machine = None
        if machines:
            c = as_xy(group).mean(axis=0)
            machine = min(machines, key=lambda m: (math.hypot(m.x - c[0], m.y - c[1]), m.x, m.y))
        return queue_goal(group, machine, robot)
    return oformation_goal(group, robot)


def _layer_key(zones, circle) -> tuple:
    key = tuple(round(v, 1) for z in zones for p in z.polygon for v in (p.x, p.y))
    if circle is not None:
        key += (round(circle.center.x, 1), round(circle.center.y, 1), round(circle.radius, 1))
    return key


class _GlobalPath:
    """Cached global path that is replanned only when it goes stale.

    Stale means the goal moved, the robot strayed from the path, or the
    set of socially blocked areas changed.
    """

    def __init__(self, grid, cfg: SimConfig):
        self.grid = grid
        self.cfg = cfg
        self.path: list[Point2D] = []
        self.goal: Point2D | None = None
        self.key: tuple = ()
        self.progress = 0

    def update(self, pose: Pose2D, goal: Point2D, events: list[str], zones=(), circle=None) -> list[Point2D]:
        key = _layer_key(zones, circle)
        stale = self.goal is None or self.goal.distance_to(goal) > self.cfg.goal_shift or key != self.key
        if not stale and self.path:
            xy = as_xy(self.path)
            stale = float(np.hypot(xy[:, 0] - pose.x, xy[:, 1] - pose.y).min()) > self.cfg.replan_distance
        if not stale:
            return self.path
        first = self.goal is None
        self.goal, self.key, self.progress = goal, key, 0
        events.append("replan")
        grids = [social_layer(self.grid, zones, circle)] if key else []
        for grid in grids + [self.grid]:
            target = nearest_free(grid, goal) or goal
            start = nearest_free(grid, pose.point) or pose.point
            try:
                self.path = plan_global(grid, start, target)
                return self.path
            except UnreachableGoalError:
                if first and grid is self.grid:
                    raise
        self.path = [pose.point, goal]
        events.append("unreachable")
        return self.path

    def local_goal(self, pose: Pose2D) -> Point2D:
        self.progress = nearest_vertex(self.path, pose, self.progress)
        return carrot(self.path, pose, self.cfg.planner.lookahead, self.progress)


def run_simulation(scenario: Scenario, config: SimConfig = SimConfig(), mode: str = "social", seed: int = 0,
                   max_ticks: int = 600, model: LinearSvmModel | None = None
                   ) -> tuple[list[TickRecord], RunMetrics]:
    """Sense, perceive, arbitrate, plan and step until success or ``max_ticks``.

    Once a formation yields a social goal, that context and goal are held
    for up to ``hold_ticks`` after the last confirming tick, so a robot
    joining a queue keeps its goal when the queue occludes itself.

    Under a scripted teleop path the robot follows the script instead of
    the planner's command (the planner still runs so the trace shows what
    it would select) and the run ends when the script does.
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    if max_ticks < 1:
        raise InvalidInputError("max_ticks must be at least 1")
    model = default_model() if model is None else model
    dt = config.dt
    grid = rasterize(scenario)
    rng = np.random.default_rng(seed)
    tracker = Tracker(config.tracker)
    smoother = ContextSmoother(config.smoothing_window)
    arbiter = ContextArbiter(model, scenario.machines, config.arbiter)
    global_path = _GlobalPath(grid, config)
    global_path.update(scenario.robot_start, scenario.robot_goal, [])

    pose = scenario.robot_start
    velocity = Velocity()
    held = None
    records: list[TickRecord] = []
    for tick in range(max_ticks):
        t = tick * dt
        events: list[str] = []
        persons = scenario.persons_at(t)
        scan = simulate_scan(grid, persons, pose, config.laser)
        tracks = tracker.update(detect_people(scan, pose, config.cluster), tick)
        env_label = smoother.update(region_context(scenario, pose, rng))
        arb = arbiter.update(env_label, tracks, pose, tick)
        label = arb.label

        social_goal = None
        if mode == "traditional":
            objectives = TRADITIONAL_OBJECTIVES
        else:
            if label.is_spatial:
                try:
                    social_goal = _social_goal(label, arb.group, scenario.machines, pose)
                    held = (label, social_goal, tick)
                except DegenerateInputError:
                    events.append("social_goal_failed")
                    label = env_label
            elif held is not None and tick - held[2] <= config.hold_ticks:
                label, social_goal = held[0], held[1]
                events.append("context_held")
            objectives = select_objectives(label)
        goal = social_goal.pose.point if social_goal is not None else scenario.robot_goal

        zones = activity_zones_for(tracks, scenario.artworks, config.zone_range) \
            if ObjectiveId.ActivitySpace in objectives else []
        circle = social_goal.circle if social_goal is not None and ObjectiveId.OSpace in objectives else None
        path = global_path.update(pose, goal, events, zones, circle)
        local_goal = global_path.local_goal(pose)
        corridor = None
        if ObjectiveId.RightSide in objectives:
            region = scenario.region_at(pose.x, pose.y)
            if region is not None and region.label == "hallway":
                corridor = corridor_frame(region.polygon, (goal.x - pose.x, goal.y - pose.y))
        snap = PlanningSnapshot(grid, local_goal, path, tracks, zones, corridor, circle)
        plan = plan_local(pose, velocity, objectives, snap, config.planner)
        events.extend(plan.events)
        if not plan.certified:  # pragma: no cover - guarded by the selection itself
            events.append("uncertified")

        if scenario.teleop is not None:
            target = scenario.teleop.at(t + dt)
            dx, dy = target.x - pose.x, target.y - pose.y
            step = math.hypot(dx, dy)
            theta = math.atan2(dy, dx) if step > 1e-9 else pose.theta
            command = Velocity(step / dt, wrap_angle(theta - pose.theta) / dt)
            new_pose = Pose2D(target.x, target.y, theta)
            events.append("teleop")
        else:
            command = plan.command
            new_pose = step_kinematics(pose, command, dt)

        values = plan.chosen_values
        obj_values = {} if values is None else {o: float(v) for o, v in zip(objectives, values)}
        records.append(TickRecord(
            tick, new_pose, command, label, tuple(objectives), plan.chosen_fitness, obj_values,
            _min_distance(new_pose, scenario.persons_at(t + dt)), events, goal, social_goal,
        ))
        pose, velocity = new_pose, command
        if scenario.teleop is not None:
            if t + dt >= scenario.teleop.end_time - 1e-9:
                break
        elif _arrived(pose, velocity, goal, config):
            break
    return records, compute_metrics(records, scenario, config)


def _arrived(pose: Pose2D, velocity: Velocity, goal: Point2D, config: SimConfig) -> bool:
    d = pose.point.distance_to(goal)
    return d <= config.arrival_radius or (d <= config.success_radius and abs(velocity.v) <= config.arrival_speed)


def compute_metrics(records: Sequence[TickRecord], scenario: Scenario, config: SimConfig = SimConfig()
                    ) -> RunMetrics:
    if not records:
        raise InvalidInputError("compute_metrics needs at least one record")
    dt = config.dt
    xy = np.array([(scenario.robot_start.x, scenario.robot_start.y)] + [(r.robot.x, r.robot.y) for r in records])
    path_length = float(np.hypot(*np.diff(xy, axis=0).T).sum())
    dists = np.array([r.min_person_distance for r in records])
    zone_ticks = 0
    if scenario.artworks:
        for r in records:
            people = scenario.persons_at((r.tick + 1) * dt)
            zones = activity_zones_for(people, scenario.artworks, config.zone_range)
            if zones and bool(in_zones(np.array([r.robot.x, r.robot.y]), zones)):
                zone_ticks += 1
    switches = sum(1 for a, b in zip(records, records[1:]) if a.context is not b.context)
    last = records[-1]
    goal = last.active_goal or scenario.robot_goal
    return RunMetrics(
        success=last.robot.distance_to(goal) <= config.success_radius,
        path_length=path_length,
        duration=len(records) * dt,
        min_person_distance=float(dists.min()),
        personal_space_violation_time=float((dists < PERSONAL_SPACE).sum()) * dt,
        activity_zone_time=zone_ticks * dt,
        context_switches=switches,
        final_position=(last.robot.x, last.robot.y),
        active_goal=(goal.x, goal.y),
    )


# ---------------------------------------------------------------------------
# trace

TRACE_OBJECTIVES = tuple(ObjectiveId)
TRACE_HEADER = ["tick", "x", "y", "theta", "v", "omega", "context", "fitness"] + \
    [f"obj:{o.name}" for o in TRACE_OBJECTIVES] + ["min_person_dist", "events"]


def _fmt(v: float | None) -> str:
    if v is None:
        return ""
    return f"{v:.9g}"


def format_trace(records: Sequence[TickRecord]) -> str:
    """CSV trace; objective columns not active on a tick are left empty."""
    out = io.StringIO()
    out.write(",".join(TRACE_HEADER) + "\n")
    for r in records:
        row = [str(r.tick), _fmt(r.robot.x), _fmt(r.robot.y), _fmt(r.robot.theta),
               _fmt(r.command.v), _fmt(r.command.omega), r.context.value, _fmt(r.chosen_fitness)]
        row += [_fmt(r.objective_values.get(o)) for o in TRACE_OBJECTIVES]
        row += [_fmt(r.min_person_distance), ";".join(r.events)]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def trace_labels(records: Sequence[TickRecord]) -> list[ContextLabel]:
    """Context labels with consecutive repeats collapsed."""
    out: list[ContextLabel] = []
    for r in records:
        if not out or out[-1] is not r.context:
            out.append(r.context)
    return out
