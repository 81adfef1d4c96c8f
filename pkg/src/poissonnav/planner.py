"""Offline global planning against static obstacles only.

Moving obstacles are ignored here by design: the planned trajectory is
frozen before any observation of the dynamic world.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from poissonnav.geometry import Aabb, Point3, Segment, distance, segment_intersects_aabb


class PlanningFailed(RuntimeError):
    pass


class InvalidEndpoint(ValueError):
    pass


def connect(waypoints: Sequence[Point3]) -> list[Segment]:
    return [Segment(a, b) for a, b in zip(waypoints, waypoints[1:])]


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[Point3, ...]
    edges: tuple[Segment, ...] = field(init=False)
    total_length: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("a trajectory needs at least one waypoint")
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        edges = tuple(connect(self.waypoints))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "total_length", math.fsum(e.length for e in edges))

    @property
    def start(self) -> Point3:
        return self.waypoints[0]

    @property
    def goal(self) -> Point3:
        return self.waypoints[-1]

    def digest(self) -> str:
        h = hashlib.sha256()
        for p in self.waypoints:
            h.update(" ".join(float(c).hex() for c in p.as_tuple()).encode())
            h.update(b"\n")
        return h.hexdigest()

    def to_text(self) -> str:
        return "".join(f"{p.x!r} {p.y!r} {p.z!r}\n" for p in self.waypoints)

    @classmethod
    def from_text(cls, text: str) -> Trajectory:
        pts = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                pts.append(Point3.of(line.split()))
        return cls(tuple(pts))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> Trajectory:
        return cls.from_text(Path(path).read_text())

    def to_json(self) -> dict:
        return {
            "waypoints": [list(p.as_tuple()) for p in self.waypoints],
            "total_length": self.total_length,
            "hash": self.digest(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> Trajectory:
        return cls(tuple(Point3.of(p) for p in doc["waypoints"]))


def resample(waypoints: Sequence[Point3], spacing: float) -> list[Point3]:
    """Split every edge into equal pieces no longer than ``spacing``; the polyline is unchanged."""
    out = [waypoints[0]]
    for a, b in zip(waypoints, waypoints[1:]):
        pieces = max(1, math.ceil(distance(a, b) / spacing - 1e-9))
        for k in range(1, pieces):
            out.append(a + (b - a) * (k / pieces))
        out.append(b)
    return out


@dataclass(frozen=True)
class PlannerConfig:
    algorithm: str = "rrt_star"
    max_iterations: int = 1000
    steer_step: float = 0.5
    # shrinking-ball radius gamma * (log n / n)^(1/d), capped at neighborhood_radius
    gamma: float = 7.0
    neighborhood_radius: float = 1.5
    goal_bias: float = 0.05
    goal_tolerance: float = 0.5
    seed: int = 0
    resample_spacing: float | None = 0.5
    planar: bool = False
    clearance: float = 0.0

    def __post_init__(self) -> None:
        if not self.steer_step > 0:
            raise ValueError("steer_step must be > 0")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must be in [0, 1]")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")


class Planner:
    """Produces a waypoint trajectory through the static part of a world."""

    def __init__(self, cfg: PlannerConfig | None = None) -> None:
        self.cfg = cfg or PlannerConfig()

    def plan(self, bounds: Aabb, statics: Sequence[Aabb], start: Point3, goal: Point3) -> Trajectory:
        self._obstacles = [b.inflated(self.cfg.clearance) for b in statics]
        self._bounds = bounds
        for p in (start, goal):
            if not bounds.contains(p) or any(b.contains(p) for b in self._obstacles):
                raise InvalidEndpoint(f"{p} is outside bounds or inside a static obstacle")
        if start == goal:
            return Trajectory((start,))
        pts = self._search(start, goal)
        if self.cfg.resample_spacing:
            pts = resample(pts, self.cfg.resample_spacing)
        return Trajectory(tuple(pts))

    def free(self, a: Point3, b: Point3) -> bool:
        return not any(segment_intersects_aabb(Segment(a, b), o) for o in self._obstacles)

    def _search(self, start: Point3, goal: Point3) -> list[Point3]:
        raise NotImplementedError


class StraightLinePlanner(Planner):
    def _search(self, start: Point3, goal: Point3) -> list[Point3]:
        if not self.free(start, goal):
            raise PlanningFailed("straight line from start to goal crosses a static obstacle")
        return [start, goal]


class RRTStarPlanner(Planner):
    """RRT* with choose-parent and rewiring over a shrinking neighborhood ball."""

    def _search(self, start: Point3, goal: Point3) -> list[Point3]:
        cfg = self.cfg
        rng = np.random.default_rng(cfg.seed)
        dim = 2 if cfg.planar else 3
        lo = np.array(self._bounds.min.as_tuple())
        hi = np.array(self._bounds.max.as_tuple())
        goal_arr = np.array(goal.as_tuple())

        cap = cfg.max_iterations + 1
        nodes = np.empty((cap, 3))
        cost = np.empty(cap)
        parent = np.full(cap, -1, dtype=int)
        children: list[list[int]] = [[] for _ in range(cap)]
        pts: list[Point3] = [start]
        nodes[0] = start.as_tuple()
        cost[0] = 0.0
        n = 1

        for _ in range(cfg.max_iterations):
            u = rng.random()
            sample = rng.uniform(lo, hi)
            if cfg.planar:
                sample[2] = start.z
            if u < cfg.goal_bias:
                sample = goal_arr.copy()
            diff = nodes[:n] - sample
            d2 = np.einsum("ij,ij->i", diff, diff)
            near_idx = int(np.argmin(d2))
            d = math.sqrt(d2[near_idx])
            if d == 0.0:
                continue
            step = min(cfg.steer_step, d)
            new_arr = nodes[near_idx] + (sample - nodes[near_idx]) * (step / d)
            new = Point3.of(new_arr)
            if not self.free(pts[near_idx], new):
                continue

            radius = min(cfg.gamma * (math.log(n + 1) / (n + 1)) ** (1.0 / dim), cfg.neighborhood_radius)
            radius = max(radius, step)
            diff = nodes[:n] - new_arr
            dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            near = np.flatnonzero(dist <= radius)
            if near_idx not in near:
                near = np.append(near, near_idx)

            # choose parent: cheapest collision-free neighbor
            via = cost[near] + dist[near]
            best = -1
            for j in near[np.argsort(via, kind="stable")]:
                if j == near_idx or self.free(pts[j], new):
                    best = int(j)
                    break
            if best < 0:
                continue
            k = n
            nodes[k] = new_arr
            cost[k] = cost[best] + dist[best]
            parent[k] = best
            children[best].append(k)
            pts.append(new)
            n += 1

            # rewire neighbors through the new node
            for j in near:
                j = int(j)
                if j == best:
                    continue
                c = cost[k] + dist[j]
                if c < cost[j] and self.free(new, pts[j]):
                    children[parent[j]].remove(j)
                    parent[j] = k
                    children[k].append(j)
                    delta = c - cost[j]
                    stack = [j]
                    while stack:
                        m = stack.pop()
                        cost[m] += delta
                        stack.extend(children[m])

        diff = nodes[:n] - goal_arr
        gd = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        candidates = np.flatnonzero(gd <= cfg.goal_tolerance)
        best, best_cost = -1, math.inf
        for j in candidates[np.argsort(cost[candidates] + gd[candidates], kind="stable")]:
            if self.free(pts[j], goal):
                best, best_cost = int(j), cost[j] + gd[j]
                break
        if best < 0:
            raise PlanningFailed(f"goal region not reached after {cfg.max_iterations} iterations")
        path = [goal]
        j = best
        if pts[j] == goal:
            j = parent[j]
            if j < 0:
                return [start, goal]
        while j >= 0:
            path.append(pts[j])
            j = parent[j]
        path.reverse()
        self.best_cost = best_cost
        return path


PLANNERS = {"rrt_star": RRTStarPlanner, "straight_line": StraightLinePlanner}


def plan(world, start: Point3, goal: Point3, cfg: PlannerConfig | None = None) -> Trajectory:
    """Plan a static-obstacle-free trajectory from ``start`` to ``goal`` in ``world``."""
    cfg = cfg or PlannerConfig()
    try:
        planner_cls = PLANNERS[cfg.algorithm]
    except KeyError:
        raise ValueError(f"unknown planner {cfg.algorithm!r}; choose from {sorted(PLANNERS)}") from None
    return planner_cls(cfg).plan(world.bounds, world.static_obstacles, start, goal)


def zigzag(n_edges: int, bounds: Aabb, seed: int = 0, step: float | None = None) -> Trajectory:
    """Random obstacle-agnostic polyline with exactly ``n_edges`` edges inside ``bounds``.

    With ``step`` the polyline is a random walk of fixed edge length (folded
    back into ``bounds``), which resembles resampled planner output; otherwise
    every waypoint is drawn uniformly from the box.
    """
    rng = np.random.default_rng(seed)
    lo = np.array(bounds.min.as_tuple())
    hi = np.array(bounds.max.as_tuple())
    if step is None:
        pts = rng.uniform(lo, hi, size=(n_edges + 1, 3))
        return Trajectory(tuple(Point3.of(p) for p in pts))
    p = rng.uniform(lo, hi)
    out = [p]
    while len(out) <= n_edges:
        d = rng.normal(size=3)
        q = p + step * d / np.linalg.norm(d)
        if np.all(q >= lo) and np.all(q <= hi):
            out.append(q)
            p = q
    return Trajectory(tuple(Point3.of(p) for p in out))
