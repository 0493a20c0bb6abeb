"""Context-aware socially-aware navigation: simulation, perception, formation
classification and multi-objective local planning."""

from .context import ContextLabel, LinearSvmModel, predict_svm, select_objectives, train_svm
from .errors import CtxnavError
from .geom import FormationFeatures, Point2D, circularity, linearity
from .paccet import paccet_fitness, pareto_front, select_best
from .planner import PlannerConfig, plan_global, plan_local
from .sim import RunMetrics, SimConfig, TickRecord, run_simulation
from .social import ObjectiveId
from .world import Pose2D, Scenario, Velocity, load_scenario, rasterize

__version__ = "0.1.0"

__all__ = [
    "ContextLabel", "CtxnavError", "FormationFeatures", "LinearSvmModel", "ObjectiveId", "PlannerConfig",
    "Point2D", "Pose2D", "RunMetrics", "Scenario", "SimConfig", "TickRecord", "Velocity", "circularity",
    "linearity", "load_scenario", "paccet_fitness", "pareto_front", "plan_global", "plan_local",
    "predict_svm", "rasterize", "run_simulation", "select_best", "select_objectives", "train_svm",
]
