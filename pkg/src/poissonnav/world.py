"""Bounded dynamic environment: known static boxes plus seeded moving spheres."""

from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from poissonnav.geometry import Aabb, Point3, Segment, Sphere, segment_intersects_sphere

Script = Callable[[float], Point3]


class MotionMode(str, enum.Enum):
    RANDOM_WAYPOINT = "random_waypoint"
    STRAIGHT_LINE = "straight_line"
    SCRIPTED = "scripted"


class InvalidWorldConfig(ValueError):
    pass


@dataclass(frozen=True)
class MovingObstacle:
    id: int
    body: Sphere
    velocity: Point3 = Point3(0.0, 0.0, 0.0)
    motion_mode: MotionMode = MotionMode.RANDOM_WAYPOINT
    script: Script | None = None


def _default_bounds() -> Aabb:
    return Aabb(Point3(0.0, 0.0, 0.0), Point3(5.0, 5.0, 5.0))


@dataclass(frozen=True)
class WorldConfig:
    bounds: Aabb = field(default_factory=_default_bounds)
    n_moving: int = 20
    n_static: int = 2
    obstacle_radius: float = 0.15
    obstacle_speed_range: tuple[float, float] = (0.2, 1.0)
    robot_radius: float = 0.0
    collision_radius: float = 0.3
    dt: float = 0.05
    seed: int = 0
    start: Point3 = Point3(0.5, 0.5, 0.5)
    goal: Point3 = Point3(4.5, 4.5, 4.5)
    static_size_range: tuple[float, float] = (0.6, 1.2)
    static_obstacles: tuple[Aabb, ...] = ()
    # random-waypoint targets are drawn from bounds inflated by this margin
    waypoint_margin: float = 1.0
    spawn_on_boundary: bool = False
    motion_mode: MotionMode = MotionMode.RANDOM_WAYPOINT

    def __post_init__(self) -> None:
        if self.n_moving < 0 or self.n_static < 0:
            raise InvalidWorldConfig("obstacle counts must be >= 0")
        if not self.dt > 0:
            raise InvalidWorldConfig(f"dt must be > 0, got {self.dt}")
        if not self.collision_radius > 0:
            raise InvalidWorldConfig("collision_radius must be > 0")
        if not self.obstacle_radius > 0 or self.robot_radius < 0:
            raise InvalidWorldConfig("obstacle_radius must be > 0 and robot_radius >= 0")
        lo, hi = self.obstacle_speed_range
        if not 0 <= lo <= hi:
            raise InvalidWorldConfig(f"bad obstacle_speed_range {self.obstacle_speed_range}")
        object.__setattr__(self, "motion_mode", MotionMode(self.motion_mode))

    @property
    def max_speed(self) -> float:
        return self.obstacle_speed_range[1]

    def with_(self, **changes) -> WorldConfig:
        return replace(self, **changes)


def _aabb_arrays(b: Aabb) -> tuple[np.ndarray, np.ndarray]:
    return np.array(b.min.as_tuple()), np.array(b.max.as_tuple())


class World:
    """Mutable simulation state. A world is owned by one run; use :meth:`clone` to fork it.

    Obstacle state lives in numpy arrays; :attr:`moving` gives immutable views.
    """

    def __init__(
        self,
        config: WorldConfig,
        static_obstacles: Sequence[Aabb] = (),
        moving: Sequence[MovingObstacle] = (),
        rng_seed: int | None = None,
    ) -> None:
        self.config = config
        self.bounds = config.bounds
        self.static_obstacles = list(static_obstacles)
        self.clock = 0.0
        self.rng_seed = config.seed if rng_seed is None else rng_seed
        self.rng = np.random.default_rng(self.rng_seed)
        lo, hi = _aabb_arrays(config.bounds.inflated(config.waypoint_margin))
        self._roam_lo, self._roam_hi = lo, hi

        k = len(moving)
        self.ids = np.array([o.id for o in moving], dtype=int)
        self.radii = np.array([o.body.radius for o in moving], dtype=float).reshape(k)
        self.pos = np.array([o.body.center.as_tuple() for o in moving], dtype=float).reshape(k, 3)
        self.vel = np.array([o.velocity.as_tuple() for o in moving], dtype=float).reshape(k, 3)
        self.modes = [MotionMode(o.motion_mode) for o in moving]
        self.scripts = {i: o.script for i, o in enumerate(moving) if o.motion_mode is MotionMode.SCRIPTED}
        self.target = self.pos.copy()
        self.speed = np.linalg.norm(self.vel, axis=1) if k else np.zeros(0)
        for i, mode in enumerate(self.modes):
            if mode is MotionMode.RANDOM_WAYPOINT:
                self._redraw(i)
            elif mode is MotionMode.SCRIPTED:
                self.pos[i] = self.scripts[i](0.0).as_tuple()
        self._initial_pos = self.pos.copy()
        self._initial_vel = self.vel.copy()
        self._roaming = np.array([m is MotionMode.RANDOM_WAYPOINT for m in self.modes], dtype=bool)

    # -- state views -------------------------------------------------------

    @property
    def n_moving(self) -> int:
        return len(self.modes)

    @property
    def moving(self) -> list[MovingObstacle]:
        return [
            MovingObstacle(
                id=int(self.ids[i]),
                body=Sphere(Point3.of(self.pos[i]), float(self.radii[i])),
                velocity=Point3.of(self.vel[i]),
                motion_mode=self.modes[i],
                script=self.scripts.get(i),
            )
            for i in range(self.n_moving)
        ]

    @property
    def contact_radii(self) -> np.ndarray:
        """Center distance at which an obstacle is in collision with the point robot."""
        return self.radii + self.config.robot_radius + self.config.collision_radius

    def state(self) -> tuple:
        """Hashable snapshot of the obstacle state, for equality checks across runs."""
        return (self.clock, self.pos.tobytes(), self.vel.tobytes())

    # -- dynamics ----------------------------------------------------------

    def _redraw(self, i: int) -> None:
        lo, hi = self.config.obstacle_speed_range
        self.target[i] = self.rng.uniform(self._roam_lo, self._roam_hi)
        self.speed[i] = self.rng.uniform(lo, hi)
        delta = self.target[i] - self.pos[i]
        d = float(np.linalg.norm(delta))
        self.vel[i] = delta / d * self.speed[i] if d > 0 else 0.0

    def step(self, dt: float | None = None) -> World:
        """Advance every moving obstacle by ``dt`` seconds (default: config dt)."""
        dt = self.config.dt if dt is None else dt
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        t_next = self.clock + dt
        roam = self._roaming
        if roam.any():
            delta = self.target[roam] - self.pos[roam]
            d = np.sqrt(np.einsum("ij,ij->i", delta, delta))
            travel = self.speed[roam] * dt
            arrived = d <= travel
            frac = np.where(arrived, 1.0, travel / np.where(arrived, 1.0, d))
            self.pos[roam] += delta * frac[:, None]
            idx = np.flatnonzero(roam)
            for i in idx[arrived]:
                self.pos[i] = self.target[i]
                self._redraw(i)
        for i, mode in enumerate(self.modes):
            if mode is MotionMode.RANDOM_WAYPOINT:
                continue
            elif mode is MotionMode.STRAIGHT_LINE:
                self.pos[i] += self.vel[i] * dt
                self._reflect(i)
            else:
                self.pos[i] = self.scripts[i](t_next).as_tuple()
        self.clock = t_next
        return self

    def _reflect(self, i: int) -> None:
        lo, hi = self._roam_lo, self._roam_hi
        for ax in range(3):
            if self.pos[i, ax] < lo[ax]:
                self.pos[i, ax] = 2 * lo[ax] - self.pos[i, ax]
                self.vel[i, ax] = -self.vel[i, ax]
            elif self.pos[i, ax] > hi[ax]:
                self.pos[i, ax] = 2 * hi[ax] - self.pos[i, ax]
                self.vel[i, ax] = -self.vel[i, ax]

    def advance(self, duration: float) -> World:
        """Step at config dt until ``duration`` more seconds of simulated time have elapsed."""
        steps = int(round(duration / self.config.dt))
        if not math.isclose(steps * self.config.dt, duration, rel_tol=1e-9, abs_tol=1e-12):
            steps = math.ceil(duration / self.config.dt)
        for _ in range(steps):
            self.step()
        return self

    # -- forking -----------------------------------------------------------

    def clone(self) -> World:
        """Exact copy, RNG state included; the copy evolves bit-identically."""
        return copy.deepcopy(self)

    def resampled(self, seed: int) -> World:
        """Same statics and config, fresh moving-obstacle realization from ``seed``.

        Random-waypoint obstacles are re-spawned; straight-line and scripted
        obstacles keep their given initial state.
        """
        w = copy.deepcopy(self)
        w.clock = 0.0
        w.rng_seed = seed
        w.rng = np.random.default_rng(seed)
        for i, mode in enumerate(w.modes):
            if mode is MotionMode.RANDOM_WAYPOINT:
                w.pos[i] = _draw_position(w.rng, w.config)
                w._redraw(i)
            elif mode is MotionMode.SCRIPTED:
                w.pos[i] = w.scripts[i](0.0).as_tuple()
            else:
                w.pos[i], w.vel[i] = self._initial_pos[i], self._initial_vel[i]
        return w

    # -- queries -----------------------------------------------------------

    def contact_spheres(self) -> list[Sphere]:
        r = self.contact_radii
        return [Sphere(Point3.of(self.pos[i]), float(r[i])) for i in range(self.n_moving)]

    def distances_to(self, p: np.ndarray) -> np.ndarray:
        """Surface distance from point ``p`` to each obstacle body, robot radius removed."""
        if not self.n_moving:
            return np.zeros(0)
        d = np.linalg.norm(self.pos - p, axis=1) - self.radii - self.config.robot_radius
        return d


def _draw_position(rng: np.random.Generator, config: WorldConfig) -> np.ndarray:
    lo, hi = _aabb_arrays(config.bounds)
    p = rng.uniform(lo, hi)
    if config.spawn_on_boundary:
        ax = int(rng.integers(3))
        p[ax] = lo[ax] if rng.random() < 0.5 else hi[ax]
    return p


def _place_statics(rng: np.random.Generator, config: WorldConfig, max_tries: int = 1000) -> list[Aabb]:
    keep_clear = [config.start, config.goal]
    clearance = config.robot_radius + config.collision_radius
    for p in keep_clear:
        for box in config.static_obstacles:
            if box.inflated(config.robot_radius).contains(p):
                raise InvalidWorldConfig(f"static obstacle {box} covers start/goal {p}")
    placed = list(config.static_obstacles)
    lo, hi = _aabb_arrays(config.bounds)
    smin, smax = config.static_size_range
    for _ in range(config.n_static):
        for _attempt in range(max_tries):
            size = rng.uniform(smin, smax, size=3)
            size = np.minimum(size, hi - lo)
            corner = rng.uniform(lo, hi - size)
            box = Aabb(Point3.of(corner), Point3.of(corner + size))
            if not any(box.inflated(clearance).contains(p) for p in keep_clear):
                placed.append(box)
                break
        else:
            raise InvalidWorldConfig("could not place static obstacles clear of start and goal")
    return placed


def spawn(config: WorldConfig) -> World:
    """Build a world at clock 0 from ``config``; fully determined by ``config.seed``."""
    for p in (config.start, config.goal):
        if not config.bounds.contains(p):
            raise InvalidWorldConfig(f"start/goal {p} outside bounds")
    rng = np.random.default_rng(config.seed)
    statics = _place_statics(rng, config)
    mode = config.motion_mode
    lo, hi = config.obstacle_speed_range
    moving = []
    for i in range(config.n_moving):
        center = _draw_position(rng, config)
        velocity = Point3(0.0, 0.0, 0.0)
        if mode is MotionMode.STRAIGHT_LINE:
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            velocity = Point3.of(direction * rng.uniform(lo, hi))
        elif mode is MotionMode.SCRIPTED:
            raise InvalidWorldConfig("scripted obstacles must be supplied explicitly, not spawned")
        moving.append(MovingObstacle(i, Sphere(Point3.of(center), config.obstacle_radius), velocity, mode))
    # the motion stream is seeded separately so placement draws never shift it
    return World(config, statics, moving, rng_seed=derive_seed(config.seed, 1))


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 32-bit child seed for (seed, tags)."""
    return int(np.random.SeedSequence([seed, *tags]).generate_state(1)[0])


def step(w: World, dt: float | None = None) -> World:
    return w.step(dt)


def collision_count(w: World, edges: Sequence[Segment]) -> int:
    """Number of obstacles touching any edge right now; each obstacle counts once."""
    return sum(1 for o in w.contact_spheres() if any(segment_intersects_sphere(e, o) for e in edges))


def per_edge_collision_counts(w: World, edges: Sequence[Segment]) -> list[int]:
    """Obstacles touching each edge; an obstacle spanning k edges counts on all k."""
    spheres = w.contact_spheres()
    return [sum(1 for o in spheres if segment_intersects_sphere(e, o)) for e in edges]
