"""Planar geometry and spatial-formation features.

Formation features describe how a group of people is arranged: a
closed-polygon circularity (1 for a circle, 0 for a line) and a
covariance-based linearity (1 for collinear, 0 for isotropic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError, SingularFitError

# noise floor for meter-scale doubles
DEGENERACY_EPS = 1e-12


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class FormationFeatures:
    circularity: float
    linearity: float

    def __post_init__(self):
        for name in ("circularity", "linearity"):
            value = getattr(self, name)
            if math.isnan(value):
                raise ValueError(f"{name} is NaN")
            object.__setattr__(self, name, min(1.0, max(0.0, float(value))))

    def as_array(self) -> np.ndarray:
        return np.array([self.circularity, self.linearity])


@dataclass(frozen=True)
class CircleFit:
    center: Point2D
    radius: float
    rms_residual: float


def as_xy(points: Iterable) -> np.ndarray:
    """Coerce points, tracks, or ``(x, y)`` pairs into an ``(n, 2)`` array."""
    rows = []
    for p in points:
        pos = getattr(p, "position", p)
        if isinstance(pos, Point2D):
            rows.append((pos.x, pos.y))
        else:
            rows.append((float(pos[0]), float(pos[1])))
    return np.asarray(rows, dtype=float).reshape(-1, 2)


def _require(xy: np.ndarray, n: int, what: str) -> None:
    if len(xy) < n:
        raise DegenerateInputError(f"{what} needs at least {n} points, got {len(xy)}")


def angular_sort(points: Sequence) -> list[Point2D]:
    """Order points by polar angle about their centroid.

    Points at the same angle are ordered nearest-first, which keeps the
    resulting polygon deterministic for repeated detections.
    """
    xy = as_xy(points)
    _require(xy, 3, "angular_sort")
    rel = xy - xy.mean(axis=0)
    angles = np.arctan2(rel[:, 1], rel[:, 0])
    radii = np.hypot(rel[:, 0], rel[:, 1])
    order = np.lexsort((radii, angles))
    return [Point2D(*xy[i]) for i in order]


def polygon_area(ordered: Sequence) -> float:
    xy = as_xy(ordered)
    _require(xy, 3, "polygon_area")
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(abs(0.5 * np.sum(xn * y - yn * x)))


def polygon_perimeter(ordered: Sequence) -> float:
    xy = as_xy(ordered)
    _require(xy, 3, "polygon_perimeter")
    edges = np.roll(xy, -1, axis=0) - xy
    return float(np.sum(np.hypot(edges[:, 0], edges[:, 1])))


def circularity(points: Sequence) -> float:
    """``4*pi*area / perimeter**2`` of the centroid-ordered polygon, in [0, 1]."""
    ordered = angular_sort(points)
    perimeter = polygon_perimeter(ordered)
    if perimeter <= DEGENERACY_EPS:
        raise DegenerateInputError("circularity of coincident points")
    value = 4.0 * math.pi * polygon_area(ordered) / perimeter**2
    return min(1.0, max(0.0, value))


def linearity_slope(points: Sequence) -> float:
    """Ordinary least-squares slope of y on x.

    Unbounded and undefined for vertical sets, so it is not used as a
    classifier feature; see :func:`linearity`.
    """
    xy = as_xy(points)
    if len(xy) < 2:
        raise DegenerateInputError("slope needs at least 2 points")
    x, y = xy[:, 0], xy[:, 1]
    n = len(xy)
    denom = np.sum(x * x) - np.sum(x) ** 2 / n
    if denom < DEGENERACY_EPS:
        raise SingularFitError("vertical or coincident points have no slope")
    return float((np.sum(x * y) - np.sum(x) * np.sum(y) / n) / denom)


def _covariance_eigenvalues(xy: np.ndarray) -> tuple[float, float]:
    rel = xy - xy.mean(axis=0)
    sxx = float(np.mean(rel[:, 0] ** 2))
    syy = float(np.mean(rel[:, 1] ** 2))
    sxy = float(np.mean(rel[:, 0] * rel[:, 1]))
    half_trace = 0.5 * (sxx + syy)
    root = math.hypot(0.5 * (sxx - syy), sxy)
    major = half_trace + root
    # product form avoids cancellation when the minor eigenvalue is tiny
    det = sxx * syy - sxy * sxy
    minor = det / major if major > 0.0 else 0.0
    return major, max(0.0, minor)


def linearity(points: Sequence) -> float:
    """``1 - minor/major`` covariance eigenvalue ratio; rotation invariant."""
    xy = as_xy(points)
    _require(xy, 3, "linearity")
    major, minor = _covariance_eigenvalues(xy)
    if major <= DEGENERACY_EPS:
        raise DegenerateInputError("linearity of coincident points")
    return min(1.0, max(0.0, 1.0 - minor / major))


def principal_axis(points: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Centroid and unit major-axis direction (total least squares line)."""
    xy = as_xy(points)
    centroid = xy.mean(axis=0)
    rel = xy - centroid
    cov = rel.T @ rel
    if np.trace(cov) <= DEGENERACY_EPS:
        raise DegenerateInputError("principal axis of coincident points")
    _, vecs = np.linalg.eigh(cov)
    return centroid, vecs[:, -1]


def best_fit_circle(points: Sequence) -> CircleFit:
    """Algebraic (Kasa) least-squares circle.

    Solves ``x^2 + y^2 + D x + E y + F = 0`` in a centred frame for
    conditioning. Raises :class:`SingularFitError` on collinear input.
    """
    xy = as_xy(points)
    _require(xy, 3, "best_fit_circle")
    major, minor = _covariance_eigenvalues(xy)
    if major <= DEGENERACY_EPS or minor <= DEGENERACY_EPS * major:
        raise SingularFitError("collinear points have no best-fit circle")
    offset = xy.mean(axis=0)
    rel = xy - offset
    a = np.column_stack([rel, np.ones(len(rel))])
    b = -(rel[:, 0] ** 2 + rel[:, 1] ** 2)
    (d, e, f), *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy = -d / 2.0, -e / 2.0
    r2 = cx * cx + cy * cy - f
    if not math.isfinite(r2) or r2 < 0.0:
        raise SingularFitError("circle fit did not converge to a real radius")
    radius = math.sqrt(r2)
    dist = np.hypot(rel[:, 0] - cx, rel[:, 1] - cy)
    rms = float(np.sqrt(np.mean((dist - radius) ** 2)))
    return CircleFit(Point2D(cx + offset[0], cy + offset[1]), radius, rms)


def wrap_angle(theta: float) -> float:
    """Normalize into (-pi, pi]."""
    wrapped = math.pi - math.fmod(math.pi - theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    elif wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    wrapped = np.pi - np.mod(np.pi - theta, 2.0 * np.pi)
    return np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)


def point_in_polygon(xy: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd test for many points against one simple polygon.

    Points on an edge (within 1e-9 m) count as inside.
    """
    pts = np.atleast_2d(np.asarray(xy, dtype=float))
    px, py = pts[..., 0], pts[..., 1]
    poly = np.asarray(polygon, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    on_edge = np.zeros(px.shape, dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < x_at)
        ex, ey = x2 - x1, y2 - y1
        length2 = ex * ex + ey * ey
        t = np.clip(((px - x1) * ex + (py - y1) * ey) / length2, 0.0, 1.0) if length2 > 0 else 0.0
        dx, dy = px - (x1 + t * ex), py - (y1 + t * ey)
        on_edge |= dx * dx + dy * dy <= 1e-18
    return inside | on_edge


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper or touching intersection of two closed segments."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    def on_segment(a, b, c):
        return min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12 and min(
            a[1], b[1]
        ) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on_segment(p1, p2, q1))
        or (o2 == 0 and on_segment(p1, p2, q2))
        or (o3 == 0 and on_segment(q1, q2, p1))
        or (o4 == 0 and on_segment(q1, q2, p2))
    )


def is_simple_polygon(polygon: Sequence) -> bool:
    poly = as_xy(polygon)
    n = len(poly)
    if n < 3:
        return False
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if segments_intersect(a1, a2, poly[j], poly[(j + 1) % n]):
                return False
    return polygon_area(poly) > DEGENERACY_EPS
