"""Context classification: formation SVM, smoothing, arbitration, objectives."""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError, InvalidInputError, InvalidTrainingSetError
from .geom import FormationFeatures, Point2D, as_xy, circularity, linearity
from .social import ObjectiveId
from .world import ENV_LABELS, Pose2D


class ContextLabel(enum.Enum):
    Hallway = "hallway"
    ArtGallery = "art_gallery"
    VendingMachine = "vending_machine"
    Other = "other"
    Queue = "queue"
    OFormation = "oformation"

    @property
    def is_spatial(self) -> bool:
        return self in (ContextLabel.Queue, ContextLabel.OFormation)


ENV_CONTEXTS = tuple(ContextLabel(name) for name in ENV_LABELS)
FORMATIONS = (ContextLabel.Queue, ContextLabel.OFormation)


@dataclass(frozen=True)
class ContextEstimate:
    label: ContextLabel
    confidence: float
    tick: int = 0


def extract_features(persons: Sequence) -> FormationFeatures:
    return FormationFeatures(circularity(persons), linearity(persons))


# ---------------------------------------------------------------------------
# linear SVM


@dataclass(frozen=True)
class SvmConfig:
    lam: float = 1e-3
    epochs: int = 200
    seed: int = 0


@dataclass(frozen=True, eq=False)
class LinearSvmModel:
    """Separator in standardized (circularity, linearity) space.

    Positive decision values are O-formations, negative are queues.
    """

    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray

    def decision(self, features: FormationFeatures | np.ndarray) -> float:
        x = features.as_array() if isinstance(features, FormationFeatures) else np.asarray(features, float)
        z = (x - self.feature_means) / self.feature_stds
        return float(z @ self.weights + self.bias)

    def to_text(self) -> str:
        def fmt(values):
            return " ".join(f"{float(v):.17g}" for v in values)

        return (
            "schema: 1\n"
            f"weights: {fmt(self.weights)}\n"
            f"bias: {self.bias:.17g}\n"
            f"means: {fmt(self.feature_means)}\n"
            f"stds: {fmt(self.feature_stds)}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "LinearSvmModel":
        fields: dict[str, list[float]] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise InvalidInputError(f"model line {lineno}: expected 'key: value'")
            try:
                fields[key.strip()] = [float(v) for v in value.split()]
            except ValueError as exc:
                raise InvalidInputError(f"model line {lineno}: {exc}") from exc
        if fields.get("schema") != [1.0]:
            raise InvalidInputError("model file must declare 'schema: 1'")
        shapes = {"weights": 2, "bias": 1, "means": 2, "stds": 2}
        for key, n in shapes.items():
            if len(fields.get(key, [])) != n:
                raise InvalidInputError(f"model field {key!r} needs {n} values")
        return cls(
            np.array(fields["weights"]), fields["bias"][0],
            np.array(fields["means"]), np.array(fields["stds"]),
        )


def train_svm(samples: Sequence[FormationFeatures], labels: Sequence[ContextLabel],
              config: SvmConfig = SvmConfig()) -> LinearSvmModel:
    """Pegasos-style hinge-loss subgradient descent on standardized features.

    The bias rides along as a constant feature. Step size is
    ``1/(lam*t)`` with the usual projection onto the ``1/sqrt(lam)`` ball;
    the visiting order is a seeded permutation per epoch.
    """
    if len(samples) != len(labels):
        raise InvalidInputError("samples and labels differ in length")
    counts = Counter(labels)
    if any(lab not in FORMATIONS for lab in counts):
        raise InvalidTrainingSetError("labels must be Queue or OFormation")
    if len(counts) < 2:
        raise InvalidTrainingSetError("training set contains a single class")

    x = np.array([s.as_array() if isinstance(s, FormationFeatures) else np.asarray(s, float) for s in samples])
    y = np.array([1.0 if lab is ContextLabel.OFormation else -1.0 for lab in labels])
    means = x.mean(axis=0)
    stds = np.maximum(x.std(axis=0), 1e-9)
    z = (x - means) / stds
    rows = [(float(a), float(b), float(t)) for (a, b), t in zip(z, y)]

    lam = config.lam
    radius = 1.0 / math.sqrt(lam)
    w0 = w1 = w2 = 0.0
    rng = np.random.default_rng(config.seed)
    t = 0
    for _ in range(config.epochs):
        for i in rng.permutation(len(rows)):
            t += 1
            a, b, yi = rows[i]
            eta = 1.0 / (lam * t)
            margin = yi * (w0 * a + w1 * b + w2)
            shrink = 1.0 - eta * lam
            w0, w1, w2 = w0 * shrink, w1 * shrink, w2 * shrink
            if margin < 1.0:
                w0 += eta * yi * a
                w1 += eta * yi * b
                w2 += eta * yi
            norm = math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
            if norm > radius:
                s = radius / norm
                w0, w1, w2 = w0 * s, w1 * s, w2 * s
    if w0 == 0.0 and w1 == 0.0:
        raise InvalidTrainingSetError("training collapsed to a zero weight vector")
    return LinearSvmModel(np.array([w0, w1]), w2, means, stds)


def predict_svm(model: LinearSvmModel, features: FormationFeatures, tick: int = 0) -> ContextEstimate:
    """Label by the sign of the decision value (ties go to OFormation)."""
    value = model.decision(features)
    label = ContextLabel.OFormation if value >= 0.0 else ContextLabel.Queue
    return ContextEstimate(label, abs(value) / float(np.linalg.norm(model.weights)), tick)


def accuracy(model: LinearSvmModel, samples: Sequence[FormationFeatures], labels: Sequence[ContextLabel]) -> float:
    if not samples:
        return float("nan")
    hits = sum(predict_svm(model, s).label is lab for s, lab in zip(samples, labels))
    return hits / len(samples)


# ---------------------------------------------------------------------------
# synthetic formations and sample files


def _queue_points(rng: np.random.Generator, n: int) -> np.ndarray:
    offsets = np.concatenate([[0.0], np.cumsum(rng.uniform(0.6, 1.0, n - 1))])
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return np.column_stack([offsets * math.cos(phi), offsets * math.sin(phi)])


def _ring_points(rng: np.random.Generator, n: int) -> np.ndarray:
    radius = rng.uniform(0.6, 1.5)
    jitter = np.radians(rng.uniform(-15.0, 15.0, n))
    angles = rng.uniform(0.0, 2.0 * math.pi) + 2.0 * math.pi * np.arange(n) / n + jitter
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def formation_points(kind: ContextLabel, rng: np.random.Generator, people: tuple[int, int],
                     noise_sigma: float) -> np.ndarray:
    n = int(rng.integers(people[0], people[1] + 1))
    pts = _queue_points(rng, n) if kind is ContextLabel.Queue else _ring_points(rng, n)
    pts = pts + rng.uniform(-5.0, 5.0, 2)
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, pts.shape)
    return pts


def generate_formation_samples(kind: ContextLabel, count: int, people: tuple[int, int] = (3, 6),
                               noise_sigma: float = 0.05, seed: int = 0
                               ) -> list[tuple[FormationFeatures, ContextLabel]]:
    """Synthetic queues (spacing 0.6-1.0 m) or rings (radius 0.6-1.5 m, +-15 deg)."""
    if kind not in FORMATIONS:
        raise InvalidInputError(f"kind must be Queue or OFormation, got {kind}")
    if people[0] < 3 or people[1] < people[0]:
        raise InvalidInputError("people range must satisfy 3 <= lo <= hi")
    if count < 1:
        raise InvalidInputError("count must be at least 1")
    rng = np.random.default_rng([seed, FORMATIONS.index(kind)])
    out = []
    while len(out) < count:
        pts = formation_points(kind, rng, people, noise_sigma)
        try:
            out.append((extract_features(pts), kind))
        except DegenerateInputError:
            continue
    return out


def synthetic_dataset(per_class: int = 170, noise_sigma: float = 0.05, seed: int = 0,
                      people: tuple[int, int] = (3, 6)) -> list[tuple[FormationFeatures, ContextLabel]]:
    return [
        s for kind in FORMATIONS
        for s in generate_formation_samples(kind, per_class, people, noise_sigma, seed)
    ]


def split_dataset(data: Sequence, test_fraction: float = 0.2, seed: int = 0) -> tuple[list, list]:
    """Seeded shuffle then split; the first ``1 - test_fraction`` trains."""
    order = np.random.default_rng(seed).permutation(len(data))
    n_train = int(round(len(data) * (1.0 - test_fraction)))
    return [data[i] for i in order[:n_train]], [data[i] for i in order[n_train:]]


def write_samples(samples: Iterable[tuple[FormationFeatures, ContextLabel]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["circularity", "linearity", "label"])
    for feat, label in samples:
        writer.writerow([f"{feat.circularity:.9g}", f"{feat.linearity:.9g}", label.value])
    return buf.getvalue()


def read_samples(text: str) -> list[tuple[FormationFeatures, ContextLabel]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["circularity", "linearity", "label"]:
        raise InvalidInputError("row 1: header must be 'circularity,linearity,label'")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        try:
            if len(row) != 3:
                raise ValueError(f"expected 3 fields, got {len(row)}")
            label = ContextLabel(row[2].strip())
            if label not in FORMATIONS:
                raise ValueError(f"label {row[2]!r} is not queue/oformation")
            out.append((FormationFeatures(float(row[0]), float(row[1])), label))
        except ValueError as exc:
            raise InvalidInputError(f"row {lineno}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# smoothing and arbitration


class ContextSmoother:
    """Rolling mean over the last ``window`` environmental probability vectors."""

    def __init__(self, window: int = 10):
        if window < 1:
            raise InvalidInputError("window must be >= 1")
        self.window = window
        self.history: deque[np.ndarray] = deque(maxlen=window)

    def update(self, probs: Sequence[float]) -> ContextLabel:
        p = np.asarray(probs, dtype=float)
        if p.shape != (len(ENV_CONTEXTS),) or not np.all(np.isfinite(p)) or np.any(p < -1e-12):
            raise InvalidInputError(f"malformed probability vector {probs!r}")
        if abs(p.sum() - 1.0) > 1e-6:
            raise InvalidInputError(f"probabilities sum to {p.sum():.9g}, not 1")
        self.history.append(p)
        mean = np.mean(self.history, axis=0)
        return ENV_CONTEXTS[int(np.argmax(mean))]


def smooth_context(history: deque, incoming: Sequence[float], window: int) -> ContextLabel:
    """Functional form of :class:`ContextSmoother.update` over an external buffer."""
    smoother = ContextSmoother(window)
    smoother.history = deque(history, maxlen=window)
    label = smoother.update(incoming)
    history.append(np.asarray(incoming, dtype=float))
    return label


@dataclass(frozen=True)
class ArbiterConfig:
    group_range: float = 4.0
    cohesion: float = 3.0
    min_confidence: float = 0.5
    vote_window: int = 5
    machine_line_distance: float = 2.0


def find_group(tracks: Sequence, robot: Pose2D, config: ArbiterConfig = ArbiterConfig()) -> list:
    """Tracks near the robot that cluster around a common centroid.

    Starts from every track within ``group_range`` and repeatedly drops
    the member farthest from the centroid until all lie within
    ``cohesion``.
    """
    group = [t for t in tracks if _pos(t).distance_to(robot) <= config.group_range]
    while len(group) >= 2:
        xy = as_xy(group)
        d = np.hypot(*(xy - xy.mean(axis=0)).T)
        if d.max() <= config.cohesion:
            break
        group.pop(int(np.argmax(d)))
    return group


def _pos(item) -> Point2D:
    pos = getattr(item, "position", item)
    return pos if isinstance(pos, Point2D) else Point2D(float(pos[0]), float(pos[1]))


def _pair_near_machine(pair: Sequence, machines: Sequence[Point2D], config: ArbiterConfig) -> bool:
    a, b = _pos(pair[0]), _pos(pair[1])
    ux, uy = b.x - a.x, b.y - a.y
    length = math.hypot(ux, uy)
    if length < 1e-9:
        return False
    for m in machines:
        off_line = abs((m.x - a.x) * uy - (m.y - a.y) * ux) / length
        if off_line <= config.machine_line_distance and min(m.distance_to(a), m.distance_to(b)) <= config.cohesion:
            return True
    return False


@dataclass
class Arbitration:
    label: ContextLabel
    group: list
    estimate: ContextEstimate | None


class ContextArbiter:
    """Combines the smoothed environmental label with the formation classifier.

    A spatial label needs at least two grouped tracks this tick and a strict
    majority among the last ``vote_window`` raw spatial verdicts.
    """

    def __init__(self, model: LinearSvmModel | None, machines: Sequence[Point2D] = (),
                 config: ArbiterConfig = ArbiterConfig()):
        self.model = model
        self.machines = tuple(machines)
        self.config = config
        self.votes: deque[ContextLabel | None] = deque(maxlen=config.vote_window)

    def update(self, env_label: ContextLabel, tracks: Sequence, robot: Pose2D, tick: int = 0) -> Arbitration:
        cfg = self.config
        group = find_group(tracks, robot, cfg)
        raw: ContextLabel | None = None
        estimate = None
        if len(group) >= 3 and self.model is not None:
            try:
                estimate = predict_svm(self.model, extract_features(group), tick)
            except DegenerateInputError:
                estimate = None
            if estimate is not None and estimate.confidence >= cfg.min_confidence:
                raw = estimate.label
        elif len(group) == 2 and _pair_near_machine(group, self.machines, cfg):
            raw = ContextLabel.Queue
            estimate = ContextEstimate(ContextLabel.Queue, float("nan"), tick)
        self.votes.append(raw)

        label = env_label
        if len(group) >= 2:
            counts = Counter(v for v in self.votes if v is not None)
            if counts:
                # most_common is insertion-ordered on ties; strict majority makes ties moot
                winner, n = counts.most_common(1)[0]
                if 2 * n > len(self.votes):
                    label = winner
        return Arbitration(label, group, estimate)


def arbitrate_context(env_label: ContextLabel, spatial: ContextEstimate | None, tracks: Sequence,
                      robot: Pose2D, machines: Sequence[Point2D] = (),
                      config: ArbiterConfig = ArbiterConfig()) -> ContextLabel:
    """Single-tick arbitration without vote history."""
    group = find_group(tracks, robot, config)
    if len(group) >= 3 and spatial is not None and spatial.confidence >= config.min_confidence:
        return spatial.label
    if len(group) == 2 and _pair_near_machine(group, machines, config):
        return ContextLabel.Queue
    return env_label


# ---------------------------------------------------------------------------
# objectives

_OBJECTIVES = {
    ContextLabel.Hallway: (ObjectiveId.GoalDistance, ObjectiveId.Clearance, ObjectiveId.PersonalSpace,
                           ObjectiveId.RightSide),
    ContextLabel.ArtGallery: (ObjectiveId.GoalDistance, ObjectiveId.Clearance, ObjectiveId.PersonalSpace,
                              ObjectiveId.ActivitySpace),
    ContextLabel.OFormation: (ObjectiveId.SocialGoal, ObjectiveId.Clearance, ObjectiveId.PersonalSpace,
                              ObjectiveId.OSpace),
    ContextLabel.Queue: (ObjectiveId.SocialGoal, ObjectiveId.Clearance, ObjectiveId.PersonalSpace),
    ContextLabel.VendingMachine: (ObjectiveId.GoalDistance, ObjectiveId.Clearance, ObjectiveId.PersonalSpace),
    ContextLabel.Other: (ObjectiveId.GoalDistance, ObjectiveId.Clearance),
}
TRADITIONAL_OBJECTIVES = _OBJECTIVES[ContextLabel.Other]


def select_objectives(label: ContextLabel) -> tuple[ObjectiveId, ...]:
    """Cardinal objectives for a context, in scoring order."""
    return _OBJECTIVES[label]


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalReport:
    classes: list
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    accuracy: float
    micro_recall: float
    support: np.ndarray = field(init=False)

    def __post_init__(self):
        self.support = self.confusion.sum(axis=1)

    def row_fractions(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.nan_to_num(self.confusion / self.support[:, None])

    def format(self) -> str:
        names = [getattr(c, "value", str(c)) for c in self.classes]
        width = max(12, *(len(n) for n in names))
        lines = [f"{'class':<{width}} precision    recall        f1   support"]
        for i, name in enumerate(names):
            lines.append(f"{name:<{width}} {self.precision[i]:9.4f} {self.recall[i]:9.4f} "
                         f"{self.f1[i]:9.4f} {int(self.support[i]):9d}")
        lines.append(f"accuracy {self.accuracy:.4f}")
        lines.append("confusion (rows = truth):")
        for name, row in zip(names, self.confusion):
            lines.append(f"  {name:<{width}} " + " ".join(f"{int(c):6d}" for c in row))
        return "\n".join(lines)


def evaluate_classifier(predictions: Sequence, truths: Sequence, classes: Sequence | None = None) -> EvalReport:
    if len(predictions) != len(truths):
        raise InvalidInputError(f"{len(predictions)} predictions vs {len(truths)} truths")
    if not truths:
        raise InvalidInputError("nothing to evaluate")
    if classes is None:
        classes = list(dict.fromkeys([*truths, *predictions]))
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    conf = np.zeros((k, k), dtype=np.int64)
    for p, t in zip(predictions, truths):
        if p not in index or t not in index:
            raise InvalidInputError(f"label outside class list: {p!r} / {t!r}")
        conf[index[t], index[p]] += 1
    tp = np.diag(conf).astype(float)
    col, row = conf.sum(axis=0), conf.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(col > 0, tp / col, 0.0)
        recall = np.where(row > 0, tp / row, 0.0)
        f1 = np.where(precision + recall > 0, 2 * precision * recall / (precision + recall), 0.0)
    total = conf.sum()
    acc = float(tp.sum() / total)
    return EvalReport(list(classes), conf, precision, recall, f1, acc, float(tp.sum() / row.sum()))
