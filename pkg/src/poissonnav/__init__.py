"""Poisson collision-rate prediction and speed-adjusted traversal in dynamic 3D worlds."""

from poissonnav.geometry import Aabb, Point3, Segment, Sphere
from poissonnav.navigator import NavigatorConfig, TraversalReport, control_run, traverse
from poissonnav.planner import PlannerConfig, PlanningFailed, Trajectory, connect, plan
from poissonnav.stochastic import PoissonModel, Unit, fit_mle, interarrival_cdf, pmf
from poissonnav.trainer import TrainedModel, TrainingConfig, train
from poissonnav.world import World, WorldConfig, spawn

__all__ = [
    "Aabb",
    "NavigatorConfig",
    "PlannerConfig",
    "PlanningFailed",
    "Point3",
    "PoissonModel",
    "Segment",
    "Sphere",
    "Trajectory",
    "TrainedModel",
    "TrainingConfig",
    "TraversalReport",
    "Unit",
    "World",
    "WorldConfig",
    "connect",
    "control_run",
    "fit_mle",
    "interarrival_cdf",
    "plan",
    "pmf",
    "spawn",
    "train",
    "traverse",
]

__version__ = "0.1.0"
