"""Seeded experiment sweeps over obstacle count and observation budget."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import groupby
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from poissonnav.config import ExperimentPlan
from poissonnav.navigator import accuracy_percent, paired_run
from poissonnav.planner import PlanningFailed, plan
from poissonnav.trainer import train
from poissonnav.world import spawn

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
WORKERS_ENV = "POISSONNAV_WORKERS"

CSV_COLUMNS = (
    "n_obstacles",
    "n_timestamps",
    "seed",
    "mode",
    "possible",
    "actual",
    "avoided",
    "accuracy_pct",
    "closest_mean_m",
    "total_time_s",
    "adjustments",
    "degenerate",
    "control_closest_mean_m",
)


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentRow:
    n_obstacles: int
    n_timestamps: int
    seed: int
    mode: str
    possible_collisions: int
    actual_collisions: int
    collisions_avoided: int
    accuracy_percent: float
    closest_distance_mean: float
    total_traversal_time: float
    adjustment_count: int
    degenerate: bool
    control_closest_distance_mean: float

    def to_csv_fields(self) -> list[str]:
        return [
            str(self.n_obstacles),
            str(self.n_timestamps),
            str(self.seed),
            self.mode,
            str(self.possible_collisions),
            str(self.actual_collisions),
            str(self.collisions_avoided),
            repr(self.accuracy_percent),
            repr(self.closest_distance_mean),
            repr(self.total_traversal_time),
            str(self.adjustment_count),
            str(int(self.degenerate)),
            repr(self.control_closest_distance_mean),
        ]

    @classmethod
    def from_csv_fields(cls, rec: dict[str, str]) -> ExperimentRow:
        return cls(
            n_obstacles=int(rec["n_obstacles"]),
            n_timestamps=int(rec["n_timestamps"]),
            seed=int(rec["seed"]),
            mode=rec["mode"],
            possible_collisions=int(rec["possible"]),
            actual_collisions=int(rec["actual"]),
            collisions_avoided=int(rec["avoided"]),
            accuracy_percent=float(rec["accuracy_pct"]),
            closest_distance_mean=float(rec["closest_mean_m"]),
            total_traversal_time=float(rec["total_time_s"]),
            adjustment_count=int(rec["adjustments"]),
            degenerate=bool(int(rec["degenerate"])),
            control_closest_distance_mean=float(rec["control_closest_mean_m"]),
        )


@dataclass(frozen=True)
class FailedCell:
    n_obstacles: int
    n_timestamps: int
    seed: int
    reason: str


def cell_seed(plan: ExperimentPlan, cell_index: int, repetition: int) -> int:
    # stride by repetitions so no two (cell, repetition) pairs share a seed
    return plan.base_seed + cell_index * plan.repetitions + repetition


def run_cell(plan_: ExperimentPlan, n_obstacles: int, n_timestamps: int, seed: int) -> ExperimentRow:
    """spawn -> plan (statics only) -> train on a fresh realization -> paired control/treatment."""
    world_cfg = plan_.world.with_(n_moving=n_obstacles, seed=seed)
    world = spawn(world_cfg)
    traj = plan(world, world_cfg.start, world_cfg.goal, replace(plan_.planner, seed=seed))
    model = train(world, traj, replace(plan_.training, n_timestamps=n_timestamps))
    control, treated = paired_run(world, traj, model, plan_.navigator)
    possible, actual = control.actual_collisions, treated.actual_collisions
    return ExperimentRow(
        n_obstacles=n_obstacles,
        n_timestamps=n_timestamps,
        seed=seed,
        mode=treated.mode,
        possible_collisions=possible,
        actual_collisions=actual,
        collisions_avoided=possible - actual,
        accuracy_percent=accuracy_percent(possible, actual),
        closest_distance_mean=treated.closest_distance,
        total_traversal_time=treated.total_time,
        adjustment_count=treated.adjustment_count,
        degenerate=possible == 0,
        control_closest_distance_mean=control.closest_distance,
    )


def _run_job(job: tuple[ExperimentPlan, int, int, int]) -> ExperimentRow | FailedCell:
    plan_, k, n, seed = job
    try:
        return run_cell(plan_, k, n, seed)
    except PlanningFailed as exc:
        return FailedCell(k, n, seed, str(exc))


def jobs(plan_: ExperimentPlan) -> list[tuple[ExperimentPlan, int, int, int]]:
    return [
        (plan_, k, n, cell_seed(plan_, c, r))
        for c, (k, n) in enumerate(plan_.cells())
        for r in range(plan_.repetitions)
    ]


def workers_from_env(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", WORKERS_ENV, raw)
        return default


def iter_sweep(plan_: ExperimentPlan, workers: int | None = None) -> Iterator[ExperimentRow | FailedCell]:
    """Yield results in (cell, repetition) order regardless of scheduling."""
    workers = workers_from_env() if workers is None else workers
    todo = jobs(plan_)
    if workers <= 1:
        for job in todo:
            yield _run_job(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_run_job, todo)


@dataclass
class SweepResult:
    rows: list[ExperimentRow]
    failed: list[FailedCell]
    interrupted: bool = False

    @property
    def partial(self) -> bool:
        return bool(self.failed) or self.interrupted


def run_sweep(
    plan_: ExperimentPlan, out_dir: str | Path | None = None, workers: int | None = None
) -> SweepResult:
    """Run every cell and repetition; with ``out_dir``, stream rows to rows.csv as they finish."""
    result = SweepResult([], [])
    fh = writer = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        fh = open(out / "rows.csv", "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
    try:
        for item in iter_sweep(plan_, workers):
            if isinstance(item, FailedCell):
                log.warning("cell failed: %s", item)
                result.failed.append(item)
                continue
            result.rows.append(item)
            if writer is not None:
                writer.writerow(item.to_csv_fields())
                fh.flush()
    except KeyboardInterrupt:
        result.interrupted = True
    finally:
        if fh is not None:
            fh.close()
    if out_dir is not None:
        write_reports(result, out_dir, plan_)
    return result


# -- aggregation ---------------------------------------------------------------


def _stderr(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return statistics.stdev(values) / math.sqrt(len(values))


def _finite_mean(values: Iterable[float]) -> float | None:
    # closest distance is infinite when a world has no moving obstacles
    finite = [v for v in values if math.isfinite(v)]
    return statistics.fmean(finite) if finite else None


def _key(r: ExperimentRow) -> tuple[int, int]:
    return (r.n_timestamps, r.n_obstacles)


def summarize(rows: Sequence[ExperimentRow]) -> list[dict]:
    """Per (n_obstacles, n_timestamps) aggregates, recomputable from the CSV alone."""
    out = []
    for (n, k), grp in groupby(sorted(rows, key=_key), key=_key):
        grp = list(grp)
        possible = sum(r.possible_collisions for r in grp)
        actual = sum(r.actual_collisions for r in grp)
        out.append(
            {
                "n_obstacles": k,
                "n_timestamps": n,
                "repetitions": len(grp),
                "possible_total": possible,
                "actual_total": actual,
                "avoided_total": possible - actual,
                "pooled_accuracy_pct": accuracy_percent(possible, actual),
                "mean_accuracy_pct": statistics.fmean(r.accuracy_percent for r in grp),
                "mean_possible": statistics.fmean(r.possible_collisions for r in grp),
                "mean_actual": statistics.fmean(r.actual_collisions for r in grp),
                "mean_closest_m": _finite_mean(r.closest_distance_mean for r in grp),
                "mean_control_closest_m": _finite_mean(r.control_closest_distance_mean for r in grp),
                "mean_total_time_s": statistics.fmean(r.total_traversal_time for r in grp),
                "mean_adjustments": statistics.fmean(r.adjustment_count for r in grp),
                "degenerate_rows": sum(r.degenerate for r in grp),
            }
        )
    return out


PLOT_KINDS = ("closest_distance", "collisions")


def emit_plot_data(rows: Sequence[ExperimentRow], kind: str) -> str:
    """Long-format CSV ``n_timestamps,arm,n_obstacles,mean,stderr`` for one figure kind.

    Infinite closest distances (no moving obstacles) are left out of the means.
    """
    if not rows:
        raise EmptyInput("no rows to plot")
    if kind == "collisions":
        arms = {
            "control": lambda r: r.possible_collisions,
            "treatment": lambda r: r.actual_collisions,
        }
    elif kind == "closest_distance":
        arms = {
            "control": lambda r: r.control_closest_distance_mean,
            "treatment": lambda r: r.closest_distance_mean,
        }
    else:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n_timestamps", "arm", "n_obstacles", "mean", "stderr"])
    ordered = sorted(rows, key=_key)
    for n, by_budget in groupby(ordered, key=lambda r: r.n_timestamps):
        by_budget = list(by_budget)
        for arm, get in arms.items():
            for k, grp in groupby(by_budget, key=lambda r: r.n_obstacles):
                values = [v for v in (float(get(r)) for r in grp) if math.isfinite(v)]
                if not values:
                    continue
                w.writerow([n, arm, k, repr(statistics.fmean(values)), repr(_stderr(values))])
    return buf.getvalue()


# -- files ---------------------------------------------------------------------


def write_rows_csv(rows: Iterable[ExperimentRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(r.to_csv_fields())


def read_rows_csv(path: str | Path) -> list[ExperimentRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing column(s) {sorted(missing)}")
        return [ExperimentRow.from_csv_fields(rec) for rec in reader]


def summary_document(rows: Sequence[ExperimentRow], failed: Sequence[FailedCell] = (), interrupted: bool = False) -> dict:
    cells = summarize(rows)
    return {
        "schema_version": SCHEMA_VERSION,
        "rows": len(rows),
        "interrupted": interrupted,
        "failed_cells": [f.__dict__ for f in failed],
        "overall": {
            "mean_accuracy_pct": statistics.fmean(c["mean_accuracy_pct"] for c in cells) if cells else None,
            "mean_closest_m": _finite_mean(r.closest_distance_mean for r in rows),
        },
        "cells": cells,
    }


def write_reports(result: SweepResult, out_dir: str | Path, plan_: ExperimentPlan | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = summary_document(result.rows, result.failed, result.interrupted)
    if plan_ is not None:
        doc["plan"] = {
            "obstacle_counts": list(plan_.obstacle_counts),
            "observation_budgets": list(plan_.observation_budgets),
            "repetitions": plan_.repetitions,
            "base_seed": plan_.base_seed,
            "mode": plan_.navigator.avoidance_mode.value,
        }
    (out / "summary.json").write_text(json.dumps(doc, indent=2, allow_nan=False))
    if result.rows:
        for kind in PLOT_KINDS:
            (out / f"plot_{kind}.csv").write_text(emit_plot_data(result.rows, kind))
