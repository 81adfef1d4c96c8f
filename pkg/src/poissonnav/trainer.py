"""Offline training: watch the frozen trajectory for n timestamps, fit the rates."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from poissonnav.planner import Trajectory
from poissonnav.stochastic import ObservationLog, PoissonModel, Unit, fit_mle
from poissonnav.world import World, collision_count, derive_seed, per_edge_collision_counts

SCHEMA_VERSION = 1


class DegenerateTrajectory(ValueError):
    """A zero-length trajectory has no spatial rate."""


@dataclass(frozen=True)
class TrainingConfig:
    n_timestamps: int = 10
    observation_interval: float = 1.0
    # None derives the training realization from the world's seed
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.n_timestamps < 1:
            raise ValueError("n_timestamps must be >= 1")
        if not self.observation_interval > 0:
            raise ValueError("observation_interval must be > 0")


@dataclass(frozen=True)
class TrainedModel:
    lambda_x: PoissonModel
    lambda_y: tuple[PoissonModel, ...]
    n_timestamps: int
    total_length: float
    trajectory_log: ObservationLog
    edge_logs: tuple[ObservationLog, ...]
    trajectory_hash: str
    config: TrainingConfig

    def temporal_rate(self, i: int) -> float:
        """Per-second collision rate on edge ``i``."""
        return self.lambda_y[i].lam / self.config.observation_interval

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "lambda_x": self.lambda_x.lam,
            "lambda_x_unit": self.lambda_x.unit.value,
            "lambda_y": [m.lam for m in self.lambda_y],
            "lambda_y_unit": Unit.PER_INTERVAL.value,
            "n_timestamps": self.n_timestamps,
            "total_length": self.total_length,
            "trajectory_counts": list(self.trajectory_log.counts),
            "edge_counts": [list(log.counts) for log in self.edge_logs],
            "trajectory_hash": self.trajectory_hash,
            "config": asdict(self.config),
        }

    @classmethod
    def from_json(cls, doc: dict) -> TrainedModel:
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema_version {doc.get('schema_version')!r}")
        return cls(
            lambda_x=PoissonModel(doc["lambda_x"], Unit.PER_METER),
            lambda_y=tuple(PoissonModel(lam, Unit.PER_INTERVAL) for lam in doc["lambda_y"]),
            n_timestamps=doc["n_timestamps"],
            total_length=doc["total_length"],
            trajectory_log=ObservationLog(doc["trajectory_counts"]),
            edge_logs=tuple(ObservationLog(c) for c in doc["edge_counts"]),
            trajectory_hash=doc["trajectory_hash"],
            config=TrainingConfig(**doc["config"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> TrainedModel:
        return cls.from_json(json.loads(Path(path).read_text()))


def observe(world: World, traj: Trajectory, cfg: TrainingConfig) -> tuple[list[int], list[list[int]]]:
    """Snapshot counts at t = 1, 2, ..., n observation intervals. Mutates ``world``."""
    edges = traj.edges
    totals: list[int] = []
    per_edge: list[list[int]] = [[] for _ in edges]
    for _ in range(cfg.n_timestamps):
        world.advance(cfg.observation_interval)
        totals.append(collision_count(world, edges))
        for i, c in enumerate(per_edge_collision_counts(world, edges)):
            per_edge[i].append(c)
    return totals, per_edge


def fit(traj: Trajectory, totals: list[int], per_edge: list[list[int]], cfg: TrainingConfig) -> TrainedModel:
    n = len(totals)
    D = traj.total_length
    if D <= 0.0:
        raise DegenerateTrajectory("cannot fit a per-meter rate over a zero-length trajectory")
    lam_x = math.fsum(totals) / (n * D)
    return TrainedModel(
        lambda_x=PoissonModel(lam_x, Unit.PER_METER),
        lambda_y=tuple(fit_mle(counts, Unit.PER_INTERVAL) for counts in per_edge),
        n_timestamps=n,
        total_length=D,
        trajectory_log=ObservationLog(totals),
        edge_logs=tuple(ObservationLog(c) for c in per_edge),
        trajectory_hash=traj.digest(),
        config=cfg,
    )


def train(world: World, traj: Trajectory, cfg: TrainingConfig | None = None) -> TrainedModel:
    """Fit the spatial and per-edge temporal rates on an independent copy of ``world``.

    ``world`` itself is left untouched; training runs on a fresh realization of
    the same obstacle process (same statics and config, new motion seed).
    """
    cfg = cfg or TrainingConfig()
    if traj.total_length <= 0.0:
        raise DegenerateTrajectory("cannot fit a per-meter rate over a zero-length trajectory")
    seed = cfg.seed if cfg.seed is not None else derive_seed(world.config.seed, 2)
    observed = world.resampled(seed)
    totals, per_edge = observe(observed, traj, cfg)
    return fit(traj, totals, per_edge, cfg)
