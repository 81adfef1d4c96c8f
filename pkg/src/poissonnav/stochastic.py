"""Poisson and exponential inter-arrival arithmetic for collision rates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence


class Unit(str, enum.Enum):
    PER_METER = "per_meter"
    PER_SECOND = "per_second"
    PER_INTERVAL = "per_interval"


class EmptyLog(ValueError):
    """Raised when fitting a rate from zero observations."""


class NegativeTime(ValueError):
    pass


class UnitError(ValueError):
    pass


@dataclass(frozen=True)
class PoissonModel:
    lam: float
    unit: Unit = Unit.PER_INTERVAL

    def __post_init__(self) -> None:
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"Poisson rate must be finite and >= 0, got {self.lam}")
        object.__setattr__(self, "unit", Unit(self.unit))


@dataclass(frozen=True)
class ObservationLog:
    counts: tuple[int, ...]

    def __init__(self, counts: Sequence[int]) -> None:
        counts = tuple(int(c) for c in counts)
        if any(c < 0 for c in counts):
            raise ValueError("observation counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


def pmf(m: PoissonModel, k: int) -> float:
    """P(K = k) for K ~ Poisson(m.lam), evaluated in log space."""
    if k < 0:
        return 0.0
    if m.lam == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(m.lam) - m.lam - math.lgamma(k + 1))


def fit_mle(log: ObservationLog | Sequence[int], unit: Unit = Unit.PER_INTERVAL) -> PoissonModel:
    """Maximum-likelihood Poisson rate, i.e. the sample mean of the counts."""
    if not isinstance(log, ObservationLog):
        log = ObservationLog(log)
    if log.n == 0:
        raise EmptyLog("cannot fit a Poisson rate from an empty observation log")
    return PoissonModel(math.fsum(log.counts) / log.n, unit)


def prob_at_least_one(m: PoissonModel) -> float:
    return -math.expm1(-m.lam)


def interarrival_cdf(m: PoissonModel, t: float) -> float:
    """P(T <= t) for the exponential waiting time to the next event."""
    if t < 0:
        raise NegativeTime(f"waiting time must be >= 0, got {t}")
    if m.unit is Unit.PER_METER:
        raise UnitError("inter-arrival times need a temporal rate, got per_meter")
    return -math.expm1(-m.lam * t)


def scale(m: PoissonModel, factor: float, new_unit: Unit = Unit.PER_INTERVAL) -> PoissonModel:
    """Rate over a stretch of ``factor`` units, e.g. per-meter rate times edge length."""
    if factor < 0:
        raise ValueError(f"scale factor must be >= 0, got {factor}")
    return PoissonModel(m.lam * factor, new_unit)


def rate_threshold(threshold: float) -> float:
    """Smallest expected count whose P(at least one event) reaches ``threshold``."""
    if threshold >= 1.0:
        return math.inf
    if threshold <= 0.0:
        return 0.0
    return -math.log1p(-threshold)
