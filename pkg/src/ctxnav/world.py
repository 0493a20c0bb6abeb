"""Scenario model, occupancy grid, simulated laser, and robot kinematics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import InvalidPoseError, ScenarioError
from .geom import Point2D, is_simple_polygon, point_in_polygon, wrap_angle, wrap_angles

ENV_LABELS = ("hallway", "art_gallery", "vending_machine", "other")
PERSON_RADIUS = 0.2
ROBOT_RADIUS = 0.25
DT = 0.1
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @property
    def point(self) -> Point2D:
        return Point2D(self.x, self.y)

    def distance_to(self, other) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Velocity:
    v: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class Box:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax


@dataclass(frozen=True)
class Wall:
    x0: float
    y0: float
    x1: float
    y1: float

    def distance(self, x: float, y: float) -> float:
        ex, ey = self.x1 - self.x0, self.y1 - self.y0
        length2 = ex * ex + ey * ey
        t = 0.0 if length2 == 0 else min(1.0, max(0.0, ((x - self.x0) * ex + (y - self.y0) * ey) / length2))
        return math.hypot(x - (self.x0 + t * ex), y - (self.y0 + t * ey))


@dataclass(frozen=True)
class Region:
    label: str
    polygon: tuple[Point2D, ...]

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.polygon])

    def contains(self, x: float, y: float) -> bool:
        return bool(point_in_polygon(np.array([[x, y]]), self.array)[0])


@dataclass(frozen=True)
class TimedPath:
    """Piecewise-linear path through ``(t, x, y)`` knots; held constant outside."""

    knots: tuple[tuple[float, float, float], ...]

    def at(self, t: float) -> Point2D:
        ks = self.knots
        if t <= ks[0][0]:
            return Point2D(ks[0][1], ks[0][2])
        for (t0, x0, y0), (t1, x1, y1) in zip(ks, ks[1:]):
            if t <= t1:
                a = (t - t0) / (t1 - t0)
                return Point2D(x0 + a * (x1 - x0), y0 + a * (y1 - y0))
        return Point2D(ks[-1][1], ks[-1][2])

    @property
    def end_time(self) -> float:
        return self.knots[-1][0]


@dataclass(frozen=True)
class PersonSpec:
    position: Point2D
    script: TimedPath | None = None

    def at(self, t: float) -> Point2D:
        return self.script.at(t) if self.script is not None else self.position


@dataclass(frozen=True)
class Scenario:
    bounds: tuple[float, float, float, float]
    robot_start: Pose2D
    robot_goal: Point2D
    resolution: float = 0.05
    boxes: tuple[Box, ...] = ()
    walls: tuple[Wall, ...] = ()
    regions: tuple[Region, ...] = ()
    persons: tuple[PersonSpec, ...] = ()
    artworks: tuple[Point2D, ...] = ()
    machines: tuple[Point2D, ...] = ()
    label_noise: float = 0.0
    teleop: TimedPath | None = None
    name: str = ""

    def persons_at(self, t: float) -> list[Point2D]:
        return [p.at(t) for p in self.persons]

    def in_bounds(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= x <= xmax and ymin <= y <= ymax

    def in_obstacle(self, x: float, y: float) -> bool:
        if any(b.contains(x, y) for b in self.boxes):
            return True
        return any(w.distance(x, y) <= 0.5 * self.resolution for w in self.walls)

    def region_at(self, x: float, y: float) -> Region | None:
        for region in self.regions:
            if region.contains(x, y):
                return region
        return None


# ---------------------------------------------------------------------------
# scenario documents

_TOP_KEYS = {"schema", "bounds", "resolution", "obstacles", "regions", "persons",
             "artworks", "machines", "robot", "noise", "name"}
_REQUIRED = ("schema", "bounds", "robot")


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(f"expected a finite number, got {value!r}", path)
    return float(value)


def _vec(value: Any, n: int, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or len(value) != n:
        raise ScenarioError(f"expected a list of {n} numbers", path)
    return tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(value))


def _keys(obj: Any, allowed: set[str], required: Sequence[str], path: str) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError("expected an object", path)
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"unknown key {key!r}", f"{path}.{key}" if path else key)
    for key in required:
        if key not in obj:
            raise ScenarioError("missing required key", f"{path}.{key}" if path else key)
    return obj


def _list(obj: dict, key: str, path: str) -> list:
    value = obj.get(key, [])
    if not isinstance(value, list):
        raise ScenarioError("expected a list", path)
    return value


def _timed_path(start: Point2D, raw: Any, path: str) -> TimedPath:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("expected a non-empty list of [t, x, y]", path)
    knots = [(0.0, start.x, start.y)]
    for i, row in enumerate(raw):
        t, x, y = _vec(row, 3, f"{path}[{i}]")
        if t <= knots[-1][0]:
            raise ScenarioError("waypoint times must be increasing and positive", f"{path}[{i}]")
        knots.append((t, x, y))
    return TimedPath(tuple(knots))


def parse_scenario(doc: dict) -> Scenario:
    """Validate a decoded scenario document and build a :class:`Scenario`."""
    _keys(doc, _TOP_KEYS, _REQUIRED, "")
    if doc["schema"] != SCHEMA_VERSION or isinstance(doc["schema"], bool):
        raise ScenarioError(f"unsupported schema {doc['schema']!r} (expected {SCHEMA_VERSION})", "schema")
    xmin, ymin, xmax, ymax = _vec(doc["bounds"], 4, "bounds")
    if not (xmax > xmin and ymax > ymin):
        raise ScenarioError("bounds must be [xmin, ymin, xmax, ymax] with positive extent", "bounds")
    resolution = _num(doc.get("resolution", 0.05), "resolution")
    if resolution <= 0:
        raise ScenarioError("must be positive", "resolution")
    noise = _num(doc.get("noise", 0.0), "noise")
    if not 0.0 <= noise < 1.0:
        raise ScenarioError("label noise must lie in [0, 1)", "noise")

    boxes, walls = [], []
    for i, ob in enumerate(_list(doc, "obstacles", "obstacles")):
        path = f"obstacles[{i}]"
        kind = ob.get("type") if isinstance(ob, dict) else None
        if kind == "box":
            _keys(ob, {"type", "min", "max"}, ("min", "max"), path)
            x0, y0 = _vec(ob["min"], 2, f"{path}.min")
            x1, y1 = _vec(ob["max"], 2, f"{path}.max")
            if not (x1 > x0 and y1 > y0):
                raise ScenarioError("box max must exceed min", path)
            boxes.append(Box(x0, y0, x1, y1))
        elif kind == "wall":
            _keys(ob, {"type", "start", "end"}, ("start", "end"), path)
            walls.append(Wall(*_vec(ob["start"], 2, f"{path}.start"), *_vec(ob["end"], 2, f"{path}.end")))
        else:
            raise ScenarioError("obstacle type must be 'box' or 'wall'", f"{path}.type")

    regions = []
    for i, reg in enumerate(_list(doc, "regions", "regions")):
        path = f"regions[{i}]"
        _keys(reg, {"label", "polygon"}, ("label", "polygon"), path)
        if reg["label"] not in ENV_LABELS:
            raise ScenarioError(f"label must be one of {ENV_LABELS}", f"{path}.label")
        if not isinstance(reg["polygon"], list):
            raise ScenarioError("expected a list of [x, y]", f"{path}.polygon")
        poly = tuple(Point2D(*_vec(p, 2, f"{path}.polygon[{j}]")) for j, p in enumerate(reg["polygon"]))
        if not is_simple_polygon(poly):
            raise ScenarioError("region polygon must be simple with positive area", f"{path}.polygon")
        regions.append(Region(reg["label"], poly))

    persons = []
    for i, per in enumerate(_list(doc, "persons", "persons")):
        path = f"persons[{i}]"
        _keys(per, {"position", "script"}, ("position",), path)
        pos = Point2D(*_vec(per["position"], 2, f"{path}.position"))
        script = _timed_path(pos, per["script"], f"{path}.script") if "script" in per else None
        persons.append(PersonSpec(pos, script))
    for i in range(len(persons)):
        for j in range(i + 1, len(persons)):
            if persons[i].position.distance_to(persons[j].position) < 0.1:
                raise ScenarioError(f"persons {i} and {j} are closer than 0.1 m", f"persons[{j}].position")

    artworks = tuple(Point2D(*_vec(p, 2, f"artworks[{i}]")) for i, p in enumerate(_list(doc, "artworks", "artworks")))
    machines = tuple(Point2D(*_vec(p, 2, f"machines[{i}]")) for i, p in enumerate(_list(doc, "machines", "machines")))

    robot = _keys(doc["robot"], {"start", "goal", "teleop"}, ("start", "goal"), "robot")
    start = Pose2D(*_vec(robot["start"], 3, "robot.start"))
    goal = Point2D(*_vec(robot["goal"], 2, "robot.goal"))
    teleop = _timed_path(start.point, robot["teleop"], "robot.teleop") if "teleop" in robot else None

    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError("expected a string", "name")

    scenario = Scenario(
        bounds=(xmin, ymin, xmax, ymax), robot_start=start, robot_goal=goal,
        resolution=resolution, boxes=tuple(boxes), walls=tuple(walls), regions=tuple(regions),
        persons=tuple(persons), artworks=artworks, machines=machines, label_noise=noise,
        teleop=teleop, name=name,
    )
    for label, pt in (("robot.start", start), ("robot.goal", goal)):
        if not scenario.in_bounds(pt.x, pt.y):
            raise ScenarioError("outside bounds", label)
        if scenario.in_obstacle(pt.x, pt.y):
            raise ScenarioError("inside an obstacle", label)
    return scenario


def load_scenario(text: str) -> Scenario:
    """Parse a JSON scenario document (see README for the schema)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, line=exc.lineno) from exc
    return parse_scenario(doc)


def scenario_to_dict(s: Scenario) -> dict:
    obstacles = [{"type": "box", "min": [b.xmin, b.ymin], "max": [b.xmax, b.ymax]} for b in s.boxes]
    obstacles += [{"type": "wall", "start": [w.x0, w.y0], "end": [w.x1, w.y1]} for w in s.walls]
    persons = []
    for p in s.persons:
        entry: dict[str, Any] = {"position": [p.position.x, p.position.y]}
        if p.script is not None:
            entry["script"] = [list(k) for k in p.script.knots[1:]]
        persons.append(entry)
    robot: dict[str, Any] = {
        "start": [s.robot_start.x, s.robot_start.y, s.robot_start.theta],
        "goal": [s.robot_goal.x, s.robot_goal.y],
    }
    if s.teleop is not None:
        robot["teleop"] = [list(k) for k in s.teleop.knots[1:]]
    return {
        "schema": SCHEMA_VERSION, "name": s.name, "bounds": list(s.bounds), "resolution": s.resolution,
        "obstacles": obstacles,
        "regions": [{"label": r.label, "polygon": [[p.x, p.y] for p in r.polygon]} for r in s.regions],
        "persons": persons, "artworks": [[a.x, a.y] for a in s.artworks],
        "machines": [[m.x, m.y] for m in s.machines], "robot": robot, "noise": s.label_noise,
    }


# ---------------------------------------------------------------------------
# occupancy grid


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Raw and inflated occupancy, indexed ``[row, col]`` = ``[y, x]``."""

    resolution: float
    origin: Point2D
    occupied: np.ndarray
    inflated: np.ndarray
    inflation_radius: float

    @property
    def width(self) -> int:
        return self.occupied.shape[1]

    @property
    def height(self) -> int:
        return self.occupied.shape[0]

    def cell_of(self, x, y):
        col = np.floor((np.asarray(x) - self.origin.x) / self.resolution).astype(np.int64)
        row = np.floor((np.asarray(y) - self.origin.y) / self.resolution).astype(np.int64)
        return row, col

    def cell_center(self, row: int, col: int) -> Point2D:
        return Point2D(self.origin.x + (col + 0.5) * self.resolution, self.origin.y + (row + 0.5) * self.resolution)

    def _lookup(self, layer: np.ndarray, x, y, outside):
        row, col = self.cell_of(x, y)
        inside = (row >= 0) & (col >= 0) & (row < self.height) & (col < self.width)
        out = np.full(np.shape(row), outside, dtype=layer.dtype)
        out[inside] = layer[row[inside], col[inside]]
        return out

    def is_free(self, x, y):
        """True where the inflated grid is free; off-grid counts as blocked."""
        return ~self._lookup(self.inflated, x, y, True)

    def is_occupied(self, x, y):
        return self._lookup(self.occupied, x, y, True)

    @cached_property
    def distance_field(self) -> np.ndarray:
        """Metres from each cell centre to the nearest raw-occupied cell centre."""
        if not self.occupied.any():
            field_ = np.full(self.occupied.shape, np.inf)
        else:
            field_ = ndimage.distance_transform_edt(~self.occupied) * self.resolution
        field_.setflags(write=False)
        return field_

    def obstacle_distance(self, x, y):
        return self._lookup(self.distance_field, x, y, 0.0)

    def tobytes(self) -> bytes:
        return self.occupied.tobytes() + self.inflated.tobytes()


def inflate(occupied: np.ndarray, radius: float, resolution: float) -> np.ndarray:
    """Cells whose centre lies within ``radius`` of an occupied cell centre."""
    if radius <= 0 or not occupied.any():
        return occupied.copy()
    return ndimage.distance_transform_edt(~occupied) * resolution <= radius + 1e-9


def _segment_hits_cell(x0, y0, x1, y1, bx0, by0, bx1, by1) -> bool:
    # Liang-Barsky clip; a positive-length overlap (not a corner touch) counts
    t0, t1 = 0.0, 1.0
    dx, dy = x1 - x0, y1 - y0
    for p, q in ((-dx, x0 - bx0), (dx, bx1 - x0), (-dy, y0 - by0), (dy, by1 - y0)):
        if p == 0:
            if q < 0:
                return False
            continue
        r = q / p
        if p < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return False
    length = math.hypot(dx, dy)
    return (t1 - t0) * length > 1e-9 or length == 0.0


def rasterize(scenario: Scenario, inflation_radius: float = ROBOT_RADIUS) -> OccupancyGrid:
    """Mark cells overlapping any obstacle, then inflate once."""
    xmin, ymin, xmax, ymax = scenario.bounds
    res = scenario.resolution
    width = int(math.ceil((xmax - xmin) / res - 1e-9))
    height = int(math.ceil((ymax - ymin) / res - 1e-9))
    occ = np.zeros((height, width), dtype=bool)

    def span(lo, hi, origin, size):
        a = int(math.floor((lo - origin) / res + 1e-9))
        b = int(math.ceil((hi - origin) / res - 1e-9))
        return max(a, 0), min(b, size)

    for box in scenario.boxes:
        c0, c1 = span(box.xmin, box.xmax, xmin, width)
        r0, r1 = span(box.ymin, box.ymax, ymin, height)
        occ[r0:r1, c0:c1] = True

    for wall in scenario.walls:
        c0 = max(int(math.floor((min(wall.x0, wall.x1) - xmin) / res)) - 1, 0)
        c1 = min(int(math.floor((max(wall.x0, wall.x1) - xmin) / res)) + 2, width)
        r0 = max(int(math.floor((min(wall.y0, wall.y1) - ymin) / res)) - 1, 0)
        r1 = min(int(math.floor((max(wall.y0, wall.y1) - ymin) / res)) + 2, height)
        for r in range(r0, r1):
            by0 = ymin + r * res
            for c in range(c0, c1):
                bx0 = xmin + c * res
                if _segment_hits_cell(wall.x0, wall.y0, wall.x1, wall.y1, bx0, by0, bx0 + res, by0 + res):
                    occ[r, c] = True

    inflated = inflate(occ, inflation_radius, res)
    occ.setflags(write=False)
    inflated.setflags(write=False)
    return OccupancyGrid(res, Point2D(xmin, ymin), occ, inflated, inflation_radius)


# ---------------------------------------------------------------------------
# laser


@dataclass(frozen=True)
class LaserConfig:
    beams: int = 512
    fov: float = 1.5 * math.pi
    range_max: float = 8.0

    @property
    def angle_min(self) -> float:
        return -0.5 * self.fov

    @property
    def angle_max(self) -> float:
        return 0.5 * self.fov

    @property
    def increment(self) -> float:
        return self.fov / (self.beams - 1)


@dataclass(frozen=True, eq=False)
class LaserScan:
    angle_min: float
    angle_max: float
    increment: float
    range_max: float
    ranges: np.ndarray

    @property
    def sentinel(self) -> float:
        return self.range_max + 1.0

    @property
    def angles(self) -> np.ndarray:
        return self.angle_min + self.increment * np.arange(len(self.ranges))

    @property
    def valid(self) -> np.ndarray:
        return self.ranges <= self.range_max


def ray_disc_distances(sx: float, sy: float, dx: np.ndarray, dy: np.ndarray, centers: np.ndarray,
                       radius: float = PERSON_RADIUS) -> np.ndarray:
    """Nearest forward intersection of each ray with any disc (``inf`` if none)."""
    out = np.full(len(dx), np.inf)
    if len(centers) == 0:
        return out
    cx = centers[:, 0][:, None] - sx
    cy = centers[:, 1][:, None] - sy
    b = cx * dx[None, :] + cy * dy[None, :]
    c = cx * cx + cy * cy - radius * radius
    disc = b * b - c
    with np.errstate(invalid="ignore"):
        t = b - np.sqrt(disc)
    t = np.where((disc >= 0) & (t > 0), t, np.inf)
    return t.min(axis=0)


def simulate_scan(grid: OccupancyGrid, persons: Sequence, pose: Pose2D,
                  config: LaserConfig = LaserConfig()) -> LaserScan:
    """Ray-trace the grid cell by cell and intersect person discs analytically."""
    if bool(grid.is_occupied(pose.x, pose.y)):
        raise InvalidPoseError(f"laser pose ({pose.x:.3f}, {pose.y:.3f}) lies in an occupied cell")
    rel = config.angle_min + config.increment * np.arange(config.beams)
    world = pose.theta + rel
    dx, dy = np.cos(world), np.sin(world)
    wall_hits = kernels.raycast(grid.occupied, grid.origin.x, grid.origin.y, grid.resolution,
                                pose.x, pose.y, dx, dy, config.range_max)
    centers = np.array([(p.x, p.y) for p in persons], dtype=float).reshape(-1, 2)
    ranges = np.minimum(wall_hits, ray_disc_distances(pose.x, pose.y, dx, dy, centers))
    ranges = np.where(ranges <= config.range_max, ranges, config.range_max + 1.0)
    return LaserScan(config.angle_min, config.angle_max, config.increment, config.range_max, ranges)


# ---------------------------------------------------------------------------
# kinematics


def step_kinematics(pose: Pose2D, cmd: Velocity, dt: float) -> Pose2D:
    """Exact unicycle integration over ``dt`` with constant ``(v, omega)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v, w, th = cmd.v, cmd.omega, pose.theta
    if abs(w) < 1e-6:
        return Pose2D(pose.x + v * math.cos(th) * dt, pose.y + v * math.sin(th) * dt, th)
    th1 = th + w * dt
    return Pose2D(
        pose.x + (v / w) * (math.sin(th1) - math.sin(th)),
        pose.y + (v / w) * (math.cos(th) - math.cos(th1)),
        th1,
    )


def step_kinematics_batch(x, y, theta, v, w, dt: float):
    """Vectorized :func:`step_kinematics` over arrays of states and controls."""
    straight = np.abs(w) < 1e-6
    safe_w = np.where(straight, 1.0, w)
    th1 = theta + w * dt
    ratio = v / safe_w
    nx = np.where(straight, x + v * np.cos(theta) * dt, x + ratio * (np.sin(th1) - np.sin(theta)))
    ny = np.where(straight, y + v * np.sin(theta) * dt, y + ratio * (np.cos(theta) - np.cos(th1)))
    nth = np.where(straight, theta, th1)
    return nx, ny, wrap_angles(nth)


# ---------------------------------------------------------------------------
# environmental context stand-in


def region_context(scenario: Scenario, pose: Pose2D, rng: np.random.Generator) -> np.ndarray:
    """Probability vector over :data:`ENV_LABELS` for the region enclosing ``pose``.

    With probability ``label_noise`` the mass of the true label is swapped
    with a uniformly chosen other label, producing single-tick flicker.
    Two random draws are consumed per call regardless of outcome.
    """
    noise = scenario.label_noise
    region = scenario.region_at(pose.x, pose.y)
    true_idx = ENV_LABELS.index(region.label if region is not None else "other")
    probs = np.full(len(ENV_LABELS), noise / (len(ENV_LABELS) - 1))
    probs[true_idx] = 1.0 - noise
    flip = rng.random() < noise
    other = int(rng.integers(len(ENV_LABELS) - 1))
    if flip:
        target = other if other < true_idx else other + 1
        probs[[true_idx, target]] = probs[[target, true_idx]]
    return probs
