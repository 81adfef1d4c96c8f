"""YAML experiment configuration.

Example::

    schema_version: 1
    world:
      bounds: [[0, 0, 0], [5, 5, 5]]
      n_static: 2
      obstacle_radius: 0.15
      obstacle_speed_range: [0.2, 1.0]
      collision_radius: 0.3
      dt: 0.05
    planner:
      max_iterations: 1000
    training:
      n_timestamps: 10
    navigator:
      threshold: 0.2
      avoidance_mode: delay_entry
    experiment:
      obstacle_counts: [5, 10, 15, 20, 25, 30, 35, 40, 45, 50]
      observation_budgets: [10, 20]
      repetitions: 10
      base_seed: 0

Every section and key is optional; missing keys take library defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from poissonnav.geometry import Aabb, Point3
from poissonnav.navigator import NavigatorConfig
from poissonnav.planner import PlannerConfig
from poissonnav.trainer import TrainingConfig
from poissonnav.world import WorldConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    obstacle_counts: tuple[int, ...] = tuple(range(5, 55, 5))
    observation_budgets: tuple[int, ...] = (10, 20)
    repetitions: int = 10
    base_seed: int = 0
    world: WorldConfig = field(default_factory=WorldConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    navigator: NavigatorConfig = field(default_factory=NavigatorConfig)

    def __post_init__(self) -> None:
        if not self.obstacle_counts or not self.observation_budgets:
            raise ConfigError("obstacle_counts and observation_budgets must be non-empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")

    def cells(self) -> list[tuple[int, int]]:
        """(n_obstacles, n_timestamps) in sweep order: budget-major, then obstacle count."""
        return [(k, n) for n in self.observation_budgets for k in self.obstacle_counts]

    def replace(self, **changes) -> ExperimentPlan:
        return dataclasses.replace(self, **changes)


def _point(v) -> Point3:
    return Point3.of(v)


def _world(d: dict) -> WorldConfig:
    d = dict(d)
    if "bounds" in d:
        lo, hi = d.pop("bounds")
        d["bounds"] = Aabb(_point(lo), _point(hi))
    for key in ("start", "goal"):
        if key in d:
            d[key] = _point(d[key])
    for key in ("obstacle_speed_range", "static_size_range"):
        if key in d:
            d[key] = tuple(float(x) for x in d[key])
    if "static_obstacles" in d:
        d["static_obstacles"] = tuple(Aabb(_point(lo), _point(hi)) for lo, hi in d["static_obstacles"])
    return _build(WorldConfig, d, "world")


def _build(cls, d: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def plan_from_dict(doc: dict[str, Any] | None) -> ExperimentPlan:
    doc = dict(doc or {})
    version = doc.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {version!r}")
    unknown = set(doc) - {"world", "planner", "training", "navigator", "experiment"}
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    exp = dict(doc.get("experiment") or {})
    for key in ("obstacle_counts", "observation_budgets"):
        if key in exp:
            exp[key] = tuple(int(x) for x in exp[key])
    return _build(
        ExperimentPlan,
        dict(
            exp,
            world=_world(doc.get("world") or {}),
            planner=_build(PlannerConfig, dict(doc.get("planner") or {}), "planner"),
            training=_build(TrainingConfig, dict(doc.get("training") or {}), "training"),
            navigator=_build(NavigatorConfig, dict(doc.get("navigator") or {}), "navigator"),
        ),
        "experiment",
    )


def load_plan(path: str | Path | None) -> ExperimentPlan:
    if path is None:
        return ExperimentPlan()
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return plan_from_dict(doc)
