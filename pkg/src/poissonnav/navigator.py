"""Online traversal of a frozen trajectory with probability-gated speed adjustment.

Two avoidance modes are provided:

``verbatim``
    Decrease speed while the inter-arrival probability over the edge's
    traversal time is at or above the threshold. Slowing lengthens the
    traversal time, which raises that probability, so in practice this loop
    only ends at ``max_adjust_iterations`` and the robot crawls the edge at
    ``min_speed`` with the edge flagged as exhausted.

``delay_entry``
    Hold at the waypoint instead. After holding ``w`` seconds the chance
    that the next predicted arrival lands inside the traversal window
    ``[w, w + t]`` is ``exp(-lam * w) * (1 - exp(-lam * t))``; each hold adds
    one expected inter-arrival time ``1 / lam`` until that drops below the
    threshold. The edge is then crossed at the initial speed.
"""

from __future__ import annotations

import bisect
import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from poissonnav.planner import Trajectory
from poissonnav.stochastic import rate_threshold
from poissonnav.trainer import TrainedModel
from poissonnav.world import World

SCHEMA_VERSION = 1


class ModelMismatch(ValueError):
    """The trained model was fitted on a different trajectory."""


class AvoidanceMode(str, enum.Enum):
    VERBATIM = "verbatim"
    DELAY_ENTRY = "delay_entry"
    CONTROL = "control"


@dataclass(frozen=True)
class NavigatorConfig:
    threshold: float = 0.2
    initial_speed: float = 1.0
    # "multiplicative" scales speed by speed_factor, "subtractive" removes speed_delta
    speed_decrement: str = "multiplicative"
    speed_factor: float = 0.8
    speed_delta: float = 0.1
    min_speed: float = 0.05
    max_adjust_iterations: int = 64
    avoidance_mode: AvoidanceMode = AvoidanceMode.DELAY_ENTRY

    def __post_init__(self) -> None:
        # threshold 1.0 is allowed: it disables both gates
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if not 0.0 < self.min_speed <= self.initial_speed:
            raise ValueError("need 0 < min_speed <= initial_speed")
        if self.speed_decrement not in ("multiplicative", "subtractive"):
            raise ValueError(f"unknown speed_decrement {self.speed_decrement!r}")
        if not 0.0 < self.speed_factor < 1.0 or not self.speed_delta > 0.0:
            raise ValueError("speed_factor must be in (0, 1) and speed_delta > 0")
        object.__setattr__(self, "avoidance_mode", AvoidanceMode(self.avoidance_mode))

    def slower(self, speed: float) -> float:
        if self.speed_decrement == "multiplicative":
            speed *= self.speed_factor
        else:
            speed -= self.speed_delta
        return max(self.min_speed, speed)


@dataclass
class EdgeRecord:
    index: int
    length: float
    speed: float
    wait: float
    lambda_x_scaled: float
    lambda_y_scaled: float
    p_spatial: float
    p_temporal: float
    p_entry: float
    risky: bool
    adjusted: bool
    exhausted: bool
    iterations: int
    enter_time: float = 0.0
    exit_time: float = 0.0
    collisions: int = 0
    closest: float = math.inf


@dataclass
class TraversalReport:
    mode: str
    edges: list[EdgeRecord]
    actual_collisions: int
    total_time: float
    trace: list[tuple[float, float]] = field(repr=False)
    possible_collisions: int | None = None

    @property
    def adjustment_count(self) -> int:
        return sum(e.adjusted for e in self.edges)

    @property
    def closest_distance(self) -> float:
        """Closest approach of any obstacle over the whole run."""
        return min((d for _, d in self.trace), default=math.inf)

    @property
    def closest_distance_mean(self) -> float:
        """Per-edge closest approach, averaged over edges."""
        if not self.edges:
            return self.closest_distance
        return math.fsum(e.closest for e in self.edges) / len(self.edges)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "actual_collisions": self.actual_collisions,
            "possible_collisions": self.possible_collisions,
            "total_time": self.total_time,
            "adjustment_count": self.adjustment_count,
            "closest_distance": _finite_or_none(self.closest_distance),
            "closest_distance_mean": _finite_or_none(self.closest_distance_mean),
            "edges": [
                {k: (_finite_or_none(v) if isinstance(v, float) else v) for k, v in asdict(e).items()}
                for e in self.edges
            ],
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "min_dist"])
        for t, d in self.trace:
            w.writerow([repr(t), repr(d)])
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _finite_or_none(x: float) -> float | None:
    return x if math.isfinite(x) else None


# -- decisions ---------------------------------------------------------------


def decide_edge(i: int, length: float, model: TrainedModel, cfg: NavigatorConfig) -> EdgeRecord:
    """Speed and hold decision for edge ``i``, made on arrival at its start waypoint."""
    v = cfg.initial_speed
    lam_x = model.lambda_x.lam * length
    lam_y = model.temporal_rate(i)
    t = length / v
    gate = rate_threshold(cfg.threshold)
    risky = lam_x >= gate
    wait, iterations, exhausted = 0.0, 0, False

    if risky and cfg.avoidance_mode is AvoidanceMode.VERBATIM:
        while lam_y * t >= gate:
            if iterations >= cfg.max_adjust_iterations:
                exhausted, v = True, cfg.min_speed
                break
            v = cfg.slower(v)
            t = length / v
            iterations += 1
    elif risky and cfg.avoidance_mode is AvoidanceMode.DELAY_ENTRY:
        hold = 1.0 / lam_y if lam_y > 0 else 0.0
        while _entry_probability(lam_y, wait, t) >= cfg.threshold:
            if iterations >= cfg.max_adjust_iterations:
                exhausted, v = True, cfg.min_speed
                break
            wait += hold
            iterations += 1

    return EdgeRecord(
        index=i,
        length=length,
        speed=v,
        wait=wait,
        lambda_x_scaled=lam_x,
        lambda_y_scaled=lam_y * (length / v),
        p_spatial=-math.expm1(-lam_x),
        p_temporal=-math.expm1(-lam_y * (length / v)),
        p_entry=_entry_probability(lam_y, wait, length / v),
        risky=risky,
        adjusted=iterations > 0 or exhausted,
        exhausted=exhausted,
        iterations=iterations,
    )


def _entry_probability(lam: float, wait: float, t: float) -> float:
    return math.exp(-lam * wait) * -math.expm1(-lam * t)


def _control_record(i: int, length: float, speed: float) -> EdgeRecord:
    return EdgeRecord(i, length, speed, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, False, False, False, 0)


# -- simulation --------------------------------------------------------------


class _Schedule:
    """Piecewise-linear robot position over time, built from per-edge records."""

    def __init__(self, traj: Trajectory, records: list[EdgeRecord]) -> None:
        self.starts: list[float] = []
        self.pieces: list[tuple[float, float, np.ndarray, np.ndarray, int]] = []
        t = 0.0
        for rec, edge in zip(records, traj.edges):
            a = np.array(edge.a.as_tuple())
            b = np.array(edge.b.as_tuple())
            if rec.wait > 0:
                self._add(t, t + rec.wait, a, a, rec.index)
                t += rec.wait
            rec.enter_time = t
            t_end = t + rec.length / rec.speed
            self._add(t, t_end, a, b, rec.index)
            t = t_end
            rec.exit_time = t
        self.total = t
        self.goal = np.array(traj.goal.as_tuple())

    def _add(self, t0: float, t1: float, a: np.ndarray, b: np.ndarray, edge: int) -> None:
        self.starts.append(t0)
        self.pieces.append((t0, t1, a, b, edge))

    def at(self, t: float) -> tuple[np.ndarray, int]:
        if not self.pieces:
            return self.goal, -1
        if t >= self.total:
            return self.goal, self.pieces[-1][4]
        k = max(0, bisect.bisect_right(self.starts, t) - 1)
        t0, t1, a, b, edge = self.pieces[k]
        if t1 <= t0:
            return b, edge
        return a + (b - a) * ((t - t0) / (t1 - t0)), edge


def simulate(
    world: World,
    traj: Trajectory,
    records: list[EdgeRecord],
    mode: str,
    on_step: Callable[[World], None] | None = None,
) -> TraversalReport:
    """Move the robot along its schedule while stepping ``world`` at its dt.

    A collision is one obstacle entering the collision radius; it must leave
    the radius before it can be counted again. Mutates ``world``.
    """
    sched = _Schedule(traj, records)
    radius = world.config.collision_radius
    inside = np.zeros(world.n_moving, dtype=bool)
    trace: list[tuple[float, float]] = []
    collisions = 0

    def sample() -> None:
        nonlocal collisions, inside
        p, edge = sched.at(world.clock)
        d = world.distances_to(p)
        hit = d <= radius
        fresh = int(np.count_nonzero(hit & ~inside))
        inside = hit
        closest = max(0.0, float(d.min())) if d.size else math.inf
        trace.append((world.clock, closest))
        if edge >= 0:
            rec = records[edge]
            rec.collisions += fresh
            rec.closest = min(rec.closest, closest)
        collisions += fresh
        if on_step is not None:
            on_step(world)

    sample()
    t_start = world.clock
    while world.clock - t_start < sched.total - 1e-12:
        world.step()
        sample()
    return TraversalReport(mode, records, collisions, sched.total, trace)


def _check_model(traj: Trajectory, model: TrainedModel) -> None:
    if model.trajectory_hash != traj.digest():
        raise ModelMismatch("trained model belongs to a different trajectory")
    if len(model.lambda_y) != len(traj.edges):
        raise ModelMismatch("edge count differs between model and trajectory")


def traverse(
    world: World,
    traj: Trajectory,
    model: TrainedModel,
    cfg: NavigatorConfig | None = None,
    on_step: Callable[[World], None] | None = None,
) -> TraversalReport:
    """Run the gated traversal on ``world`` (which is mutated; pass a clone to keep it)."""
    cfg = cfg or NavigatorConfig()
    _check_model(traj, model)
    records = [decide_edge(i, e.length, model, cfg) for i, e in enumerate(traj.edges)]
    return simulate(world, traj, records, cfg.avoidance_mode.value, on_step)


def control_run(
    world: World,
    traj: Trajectory,
    speed: float = 1.0,
    on_step: Callable[[World], None] | None = None,
) -> TraversalReport:
    """Traverse at constant ``speed`` with no adjustment; defines the possible collisions."""
    if not speed > 0:
        raise ValueError("speed must be > 0")
    records = [_control_record(i, e.length, speed) for i, e in enumerate(traj.edges)]
    return simulate(world, traj, records, AvoidanceMode.CONTROL.value, on_step)


def paired_run(
    world: World, traj: Trajectory, model: TrainedModel, cfg: NavigatorConfig | None = None
) -> tuple[TraversalReport, TraversalReport]:
    """Control and treatment on two exact clones of ``world``; ``world`` is untouched."""
    cfg = cfg or NavigatorConfig()
    control = control_run(world.clone(), traj, cfg.initial_speed)
    treated = traverse(world.clone(), traj, model, cfg)
    treated.possible_collisions = control.actual_collisions
    control.possible_collisions = control.actual_collisions
    return control, treated


def accuracy_percent(possible: int, actual: int) -> float:
    """Share of possible collisions avoided, in percent; 100 when nothing was possible."""
    if possible == 0:
        return 100.0
    return 100.0 * (possible - actual) / possible
