"""Command-line entry point: ``poissonnav {plan,train,run,sweep,report}``.

Exit codes: 0 success, 1 configuration error, 2 partial results (some cells failed).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from poissonnav.config import ConfigError, ExperimentPlan, load_plan
from poissonnav.harness import (
    PLOT_KINDS,
    SweepResult,
    emit_plot_data,
    read_rows_csv,
    run_sweep,
    summary_document,
    write_reports,
)
from poissonnav.navigator import AvoidanceMode, ModelMismatch, accuracy_percent, paired_run
from poissonnav.planner import InvalidEndpoint, PlanningFailed, Trajectory, plan
from poissonnav.trainer import TrainedModel, train
from poissonnav.world import InvalidWorldConfig, World, spawn

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2

log = logging.getLogger("poissonnav")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--obstacles", type=int, help="number of moving obstacles")
    p.add_argument("--timestamps", type=int, help="observation timestamps for training")
    p.add_argument("--seed", type=int, help="world seed (sweep: base seed)")
    p.add_argument("--mode", choices=[AvoidanceMode.VERBATIM.value, AvoidanceMode.DELAY_ENTRY.value])
    p.add_argument("--out", type=Path, help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poissonnav", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan a trajectory through the static obstacles")
    _add_common(p)

    p = sub.add_parser("train", help="fit collision rates for a planned trajectory")
    _add_common(p)
    p.add_argument("--trajectory", type=Path, required=True)

    p = sub.add_parser("run", help="paired control/treatment traversal with a trained model")
    _add_common(p)
    p.add_argument("--trajectory", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--trace", type=Path, help="write the closest-distance trace CSV here")

    p = sub.add_parser("sweep", help="run the full experiment grid")
    _add_common(p)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--workers", type=int, help="parallel processes (default: $POISSONNAV_WORKERS or 1)")

    p = sub.add_parser("report", help="summary JSON and plot-data CSVs from a rows CSV")
    p.add_argument("rows", type=Path)
    p.add_argument("--out", type=Path)
    return parser


def _plan_with_overrides(args: argparse.Namespace) -> ExperimentPlan:
    xp = load_plan(args.config)
    world = xp.world
    if args.obstacles is not None:
        world = world.with_(n_moving=args.obstacles)
        xp = xp.replace(obstacle_counts=(args.obstacles,))
    if args.seed is not None:
        world = world.with_(seed=args.seed)
        xp = xp.replace(base_seed=args.seed)
    xp = xp.replace(world=world)
    if args.timestamps is not None:
        xp = xp.replace(
            training=replace(xp.training, n_timestamps=args.timestamps),
            observation_budgets=(args.timestamps,),
        )
    if args.mode is not None:
        xp = xp.replace(navigator=replace(xp.navigator, avoidance_mode=AvoidanceMode(args.mode)))
    return xp


def _world(xp: ExperimentPlan) -> World:
    return spawn(xp.world)


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def cmd_plan(args, xp: ExperimentPlan) -> int:
    world = _world(xp)
    traj = plan(world, xp.world.start, xp.world.goal, replace(xp.planner, seed=xp.world.seed))
    _write(traj.to_text(), args.out)
    log.info("planned %d edges, D = %.3f m", len(traj.edges), traj.total_length)
    return EXIT_OK


def cmd_train(args, xp: ExperimentPlan) -> int:
    traj = Trajectory.load(args.trajectory)
    model = train(_world(xp), traj, xp.training)
    _write(json.dumps(model.to_json(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_run(args, xp: ExperimentPlan) -> int:
    traj = Trajectory.load(args.trajectory)
    model = TrainedModel.load(args.model)
    control, treated = paired_run(_world(xp), traj, model, xp.navigator)
    doc = {
        "possible_collisions": control.actual_collisions,
        "actual_collisions": treated.actual_collisions,
        "accuracy_pct": accuracy_percent(control.actual_collisions, treated.actual_collisions),
        "control": control.to_json(),
        "treatment": treated.to_json(),
    }
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    if args.trace is not None:
        args.trace.write_text(treated.trace_csv())
    return EXIT_OK


def cmd_sweep(args, xp: ExperimentPlan) -> int:
    if args.repetitions is not None:
        xp = xp.replace(repetitions=args.repetitions)
    out = args.out or Path("sweep_out")
    result: SweepResult = run_sweep(xp, out, workers=args.workers)
    log.info("%d rows written to %s", len(result.rows), out)
    return EXIT_PARTIAL if result.partial else EXIT_OK


def cmd_report(args) -> int:
    rows = read_rows_csv(args.rows)
    if args.out is None:
        sys.stdout.write(json.dumps(summary_document(rows), indent=2) + "\n")
        for kind in PLOT_KINDS:
            sys.stdout.write(f"# {kind}\n" + emit_plot_data(rows, kind))
        return EXIT_OK
    write_reports(SweepResult(rows, []), args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args)
        xp = _plan_with_overrides(args)
        handler = {"plan": cmd_plan, "train": cmd_train, "run": cmd_run, "sweep": cmd_sweep}[args.command]
        return handler(args, xp)
    except (ConfigError, InvalidWorldConfig, InvalidEndpoint, ModelMismatch, FileNotFoundError, ValueError) as exc:
        print(f"poissonnav: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlanningFailed as exc:
        print(f"poissonnav: planning failed: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
