"""Pareto front, normalization, and the concavity-eliminating gauge fitness.

Every candidate is scored by the radial gauge of the weakly-dominated
region of the current front: front members score exactly 1, dominated
points more, points beyond the front less. Because it is front membership
rather than convex-hull membership that sets the score, points in concave
parts of the front are as selectable as any other front point, which a
weighted sum cannot guarantee. Lower fitness is better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError

EPS = 1e-9
SPAN_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class NormalizationBounds:
    utopia: np.ndarray
    nadir: np.ndarray


@dataclass(frozen=True, eq=False)
class ParetoFront:
    members: np.ndarray
    indices: np.ndarray


def _matrix(vectors) -> np.ndarray:
    try:
        m = np.asarray(vectors, dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"objective vectors have inconsistent lengths: {exc}") from exc
    if m.ndim == 1:
        m = m[:, None] if len(m) else m.reshape(0, 0)
    if m.ndim != 2:
        raise InvalidInputError("objective vectors have inconsistent lengths")
    return m


def pareto_front(vectors) -> np.ndarray:
    """Indices of non-dominated vectors; duplicates keep the lowest index."""
    m = _matrix(vectors)
    if len(m) == 0:
        raise InvalidInputError("pareto_front needs at least one vector")
    return np.nonzero(kernels.nondominated(m))[0]


def normalize(vectors) -> tuple[np.ndarray, NormalizationBounds]:
    """Min-max scale each objective over the candidate set.

    A column whose spread is below 1e-12 carries no preference and maps to 0.
    Values within ``EPS`` of 0 are snapped to 0 so the front and the gauge
    agree on which coordinates are zero.
    """
    m = _matrix(vectors)
    if len(m) == 0:
        raise InvalidInputError("normalize needs at least one vector")
    utopia, nadir = m.min(axis=0), m.max(axis=0)
    span = nadir - utopia
    live = span > SPAN_EPS
    out = np.zeros_like(m)
    out[:, live] = (m[:, live] - utopia[live]) / span[live]
    out[out <= EPS] = 0.0
    return out, NormalizationBounds(utopia, nadir)


def build_front(normalized) -> ParetoFront:
    m = _matrix(normalized)
    idx = pareto_front(m)
    return ParetoFront(m[idx], idx)


def paccet_fitness(front: ParetoFront | np.ndarray, candidate) -> float | np.ndarray:
    """Gauge fitness ``1 / rho`` of one candidate (1-D) or many (2-D).

    ``rho`` is the smallest scale at which the candidate, shrunk toward the
    utopia point, is weakly dominated by some front member.
    """
    members = front.members if isinstance(front, ParetoFront) else _matrix(front)
    if len(members) == 0:
        raise InvalidInputError("paccet_fitness needs a non-empty front")
    cand = np.asarray(candidate, dtype=float)
    single = cand.ndim == 1
    cands = np.atleast_2d(cand)
    if cands.shape[1] != members.shape[1]:
        raise InvalidInputError("candidate and front dimensions differ")
    fit = kernels.gauge(members, cands, EPS)
    return float(fit[0]) if single else fit


@dataclass
class Selection:
    index: int
    fitness: np.ndarray
    normalized: np.ndarray
    front: ParetoFront
    bounds: NormalizationBounds


def select_best(vectors, tie_break: str = "index") -> Selection:
    """Minimum-fitness candidate over normalize -> front -> gauge.

    Equal fitness is resolved by lowest index (``tie_break="index"``) or
    by Euclidean distance of the normalized vector to the utopia point and
    then index (``tie_break="utopia"``).
    """
    if tie_break not in ("index", "utopia"):
        raise InvalidInputError(f"unknown tie_break {tie_break!r}")
    normalized, bounds = normalize(vectors)
    front = build_front(normalized)
    fitness = np.asarray(paccet_fitness(front, normalized))
    best = float(fitness.min())
    tied = np.nonzero(fitness == best)[0]
    if tie_break == "utopia" and len(tied) > 1:
        dist = np.sqrt((normalized[tied] ** 2).sum(axis=1))
        tied = tied[dist == dist.min()]
    return Selection(int(tied[0]), fitness, normalized, front, bounds)
