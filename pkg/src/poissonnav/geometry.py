"""3D primitives and closed-set intersection predicates.

Everything here is pure Python over immutable values. Boundary contact
always counts as intersection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite coordinate in {self!r}")

    def __add__(self, other: Point3) -> Point3:
        return Point3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Point3) -> Point3:
        return Point3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, k: float) -> Point3:
        return Point3(self.x * k, self.y * k, self.z * k)

    __rmul__ = __mul__

    def dot(self, other: Point3) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @classmethod
    def of(cls, xyz) -> Point3:
        x, y, z = xyz
        return cls(float(x), float(y), float(z))


def distance(p: Point3, q: Point3) -> float:
    return (p - q).norm()


@dataclass(frozen=True)
class Segment:
    a: Point3
    b: Point3

    @property
    def length(self) -> float:
        return distance(self.a, self.b)

    def point_at(self, t: float) -> Point3:
        """Point at parameter ``t`` in [0, 1] along the segment."""
        if t <= 0.0:
            return self.a
        if t >= 1.0:
            return self.b
        return self.a + (self.b - self.a) * t


@dataclass(frozen=True)
class Sphere:
    center: Point3
    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"sphere radius must be positive and finite, got {self.radius}")


@dataclass(frozen=True)
class Aabb:
    min: Point3
    max: Point3

    def __post_init__(self) -> None:
        if self.min.x > self.max.x or self.min.y > self.max.y or self.min.z > self.max.z:
            raise ValueError(f"Aabb min must be <= max componentwise: {self!r}")

    @property
    def size(self) -> Point3:
        return self.max - self.min

    def contains(self, p: Point3) -> bool:
        return (
            self.min.x <= p.x <= self.max.x
            and self.min.y <= p.y <= self.max.y
            and self.min.z <= p.z <= self.max.z
        )

    def inflated(self, margin: float) -> Aabb:
        m = Point3(margin, margin, margin)
        return Aabb(self.min - m, self.max + m)


def distance_point_segment(p: Point3, s: Segment) -> float:
    # canonical endpoint order keeps the result exactly symmetric under a<->b
    a, b = s.a, s.b
    if b.as_tuple() < a.as_tuple():
        a, b = b, a
    d = b - a
    dd = d.dot(d)
    da = distance(p, a)
    if dd == 0.0:
        return da
    t = (p - a).dot(d) / dd
    if t <= 0.0:
        return da
    db = distance(p, b)
    if t >= 1.0:
        return db
    foot = a + d * t
    return min(distance(p, foot), da, db)


def segment_intersects_sphere(s: Segment, o: Sphere) -> bool:
    return distance_point_segment(o.center, s) <= o.radius


def segment_intersects_aabb(s: Segment, b: Aabb) -> bool:
    """Slab clipping of the parametric segment against a closed box."""
    t0, t1 = 0.0, 1.0
    for lo, hi, a, e in (
        (b.min.x, b.max.x, s.a.x, s.b.x),
        (b.min.y, b.max.y, s.a.y, s.b.y),
        (b.min.z, b.max.z, s.a.z, s.b.z),
    ):
        d = e - a
        if d == 0.0:
            if a < lo or a > hi:
                return False
            continue
        ta = (lo - a) / d
        tb = (hi - a) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True
