"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one PASS/FAIL line; the lines are also collected in the
"acceptance criteria" section of the pytest terminal summary.
"""

import math
import statistics
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from poissonnav.config import ExperimentPlan
from poissonnav.geometry import Aabb, Point3, Segment, Sphere, distance_point_segment, segment_intersects_aabb, segment_intersects_sphere
from poissonnav.harness import run_sweep
from poissonnav.navigator import NavigatorConfig, control_run, decide_edge, traverse
from poissonnav.planner import PlannerConfig, PlanningFailed, plan, zigzag
from poissonnav.stochastic import ObservationLog, PoissonModel, Unit, fit_mle, interarrival_cdf, pmf
from poissonnav.trainer import TrainingConfig, train
from poissonnav.world import WorldConfig, spawn
from tests.helpers import parked, rate_model, scripted, scripted_world, straight_trajectory
from tests.oracles import brute_distance, brute_hits_box, integrated_cdf
from tests.test_planner import check_invariants, sealed_goal_world

OBSTACLE_COUNTS = tuple(range(5, 55, 5))


@pytest.fixture(scope="module")
def sweeps(tmp_path_factory):
    """The default sweep, run twice from the same base seed."""
    plan_ = ExperimentPlan()
    out = []
    for name in ("first", "second"):
        d = tmp_path_factory.mktemp(name)
        t0 = time.perf_counter()
        res = run_sweep(plan_, d, workers=1)
        out.append((res, d / "rows.csv", time.perf_counter() - t0))
    return out


def _cells(rows):
    by = {}
    for r in rows:
        by.setdefault((r.n_obstacles, r.n_timestamps), []).append(r)
    return by


# 1 -----------------------------------------------------------------------------


def test_criterion_1_statistics_exactness(verdict):
    rng = np.random.default_rng(1)
    worst_mle = 0.0
    for _ in range(1000):
        size = int(rng.integers(1, 300))
        scale = float(rng.choice([1, 10, 1000, 10**6]))
        xs = [int(x) for x in rng.integers(0, scale, size=size, endpoint=True)]
        exact = Fraction(sum(xs), len(xs))
        got = fit_mle(ObservationLog(xs)).lam
        if exact:
            worst_mle = max(worst_mle, abs(Fraction(got) - exact) / exact)
        else:
            worst_mle = max(worst_mle, abs(got))
    worst_norm = 0.0
    for lam in (0.1, 1.0, 5.0, 20.0):
        K = math.ceil(lam + 20 * math.sqrt(lam) + 50)
        worst_norm = max(worst_norm, abs(math.fsum(pmf(PoissonModel(lam), k) for k in range(K + 1)) - 1.0))
    worst_cdf = 0.0
    for lam in (0.05, 0.5, 1.0, 3.0, 12.0):
        for t in (0.0, 0.1, 1.0, 2.5, 10.0):
            got = interarrival_cdf(PoissonModel(lam, Unit.PER_SECOND), t)
            worst_cdf = max(worst_cdf, abs(got - integrated_cdf(lam, t)))
    ok = worst_mle <= 1e-12 and worst_norm <= 1e-9 and worst_cdf <= 1e-9
    detail = f"mle rel err {float(worst_mle):.1e}, pmf sum err {worst_norm:.1e}, cdf err {worst_cdf:.1e}"
    assert verdict(1, "statistics exactness", ok, detail), detail


# 2 -----------------------------------------------------------------------------


def test_criterion_2_geometry_oracle_equivalence(verdict):
    rng = np.random.default_rng(2)
    fine = 1_000_000
    bad = {"distance": 0, "sphere": 0, "box": 0}
    unresolved = 0
    for _ in range(1000):
        a, b, p = rng.uniform(-2, 3, size=(3, 3))
        seg = Segment(Point3.of(a), Point3.of(b))
        got = distance_point_segment(Point3.of(p), seg)
        d, slack = brute_distance(p, a, b)
        if not (got <= d + 1e-12 and d - got <= slack + 1e-12):
            bad["distance"] += 1

        c = rng.uniform(-1, 2, size=3)
        r = float(rng.uniform(0.05, 1.5))
        hit = segment_intersects_sphere(seg, Sphere(Point3.of(c), r))
        d, slack = brute_distance(c, a, b)
        if abs(d - r) <= slack:
            d, slack = brute_distance(c, a, b, n=fine)
        if abs(d - r) <= slack:
            unresolved += 1
        elif hit != (d <= r):
            bad["sphere"] += 1

        lo = rng.uniform(-1, 1.5, size=3)
        hi = lo + rng.uniform(0.5, 3.0, size=3)
        hit = segment_intersects_aabb(seg, Aabb(Point3.of(lo), Point3.of(hi)))
        ref = brute_hits_box(a, b, lo, hi)
        if hit != ref:
            ref = brute_hits_box(a, b, lo, hi, n=fine)
        if hit != ref:
            bad["box"] += 1
    ok = not any(bad.values())
    detail = f"disagreements {bad}, sub-resolution sphere cases {unresolved}, 1000 cases each"
    assert verdict(2, "geometry oracle equivalence", ok, detail), detail


# 3 -----------------------------------------------------------------------------


def test_criterion_3_training_closed_forms(verdict):
    failures = []
    rng = np.random.default_rng(3)
    traj = straight_trajectory(n_edges=6, spacing=0.7)
    edges = traj.edges
    for case in range(10):
        n = int(rng.integers(3, 15))
        obstacles, expected_edge, expected_total = [], np.zeros(len(edges), dtype=int), 0
        for oid in range(int(rng.integers(0, 12))):
            # park away from the contact boundary so the oracle is unambiguous
            while True:
                c = np.array([rng.uniform(0.0, 5.0), rng.uniform(1.5, 3.5), rng.uniform(1.5, 3.5)])
                dists = [brute_distance(c, e.a.as_tuple(), e.b.as_tuple(), n=20_000) for e in edges]
                contact = 0.15 + 0.3
                if all(abs(d - contact) > 10 * s + 1e-6 for d, s in dists):
                    break
            obstacles.append(parked(tuple(c), oid=oid))
            touching = np.array([d <= contact for d, _ in dists])
            expected_edge += touching
            expected_total += bool(touching.any())
        m = train(scripted_world(obstacles), traj, TrainingConfig(n_timestamps=n))
        want_x = (expected_total * n) / (n * traj.total_length)
        want_y = [(int(c) * n) / n for c in expected_edge]
        if m.lambda_x.lam != want_x or [y.lam for y in m.lambda_y] != want_y:
            failures.append(case)

    # a scripted crossing of edge 3 at every snapshot
    five = straight_trajectory(n_edges=5)
    crossing = scripted(lambda t: Point3(4.0, 2.5 + 2.0 * math.sin(math.pi * t) ** 2, 2.5))
    m = train(scripted_world([crossing]), five, TrainingConfig(n_timestamps=10))
    if [y.lam for y in m.lambda_y] != [0.0, 0.0, 0.0, 1.0, 0.0] or m.lambda_x.lam != 10 / (10 * 5.0):
        failures.append("edge-3 crossing")
    ok = not failures
    detail = f"11 scripted worlds, exact equality, failures {failures}"
    assert verdict(3, "training closed forms", ok, detail), detail


# 4 -----------------------------------------------------------------------------


def test_criterion_4_gate_algebra(verdict):
    with mpmath.workdps(40):
        boundary = float(-mpmath.log(mpmath.mpf(4) / 5))
    traj = straight_trajectory(n_edges=1)
    cfg = NavigatorConfig(threshold=0.2)
    wrong = 0
    for lam in np.concatenate([np.linspace(0.0, 1.0, 10_001), boundary + np.linspace(-1e-12, 1e-12, 201)]):
        if decide_edge(0, 1.0, rate_model(traj, float(lam), [0.0]), cfg).risky != (lam >= boundary):
            wrong += 1
    fires_at = decide_edge(0, 1.0, rate_model(traj, boundary, [0.0]), cfg).risky
    below = decide_edge(0, 1.0, rate_model(traj, math.nextafter(boundary, 0.0), [0.0]), cfg).risky
    ok = wrong == 0 and fires_at and not below and abs(boundary - 0.2231) < 1e-4
    detail = f"boundary {boundary:.10f}, {wrong} misclassified of 10202 scanned rates"
    assert verdict(4, "gate algebra", ok, detail), detail


# 5 -----------------------------------------------------------------------------


def test_criterion_5_threshold_degeneracy(verdict):
    mismatches = []
    for seed in range(20):
        cfg = WorldConfig(n_moving=10 + seed, seed=seed)
        w = spawn(cfg)
        traj = plan(w, cfg.start, cfg.goal, PlannerConfig(seed=seed))
        model = train(w, traj)
        ctl = control_run(w.clone(), traj)
        trt = traverse(w.clone(), traj, model, NavigatorConfig(threshold=1.0))
        same = (
            trt.actual_collisions == ctl.actual_collisions
            and trt.total_time == ctl.total_time
            and trt.trace == ctl.trace
            and [e.speed for e in trt.edges] == [e.speed for e in ctl.edges]
        )
        if not same:
            mismatches.append(seed)
    ok = not mismatches
    detail = f"20 seeded worlds, mismatching seeds {mismatches}"
    assert verdict(5, "threshold degeneracy", ok, detail), detail


# 6 -----------------------------------------------------------------------------


def test_criterion_6_treatment_effect(verdict, sweeps):
    (res, _, elapsed), _ = sweeps
    cells = _cells(res.rows)
    failing = []
    lines = []
    for (k, n), grp in sorted(cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        with_alg = statistics.fmean(r.actual_collisions for r in grp)
        without = statistics.fmean(r.possible_collisions for r in grp)
        acc = statistics.fmean(r.accuracy_percent for r in grp)
        good = len(grp) >= 10 and with_alg < without and acc >= 75.0
        lines.append(f"k={k} n={n}: {with_alg:.1f} vs {without:.1f}, acc {acc:.1f}%")
        if not good:
            failing.append((k, n))
    print("\n".join(lines))
    ok = not failing and set(k for k, _ in cells) == set(OBSTACLE_COUNTS)
    detail = f"{len(cells) - len(failing)}/{len(cells)} cells pass, sweep {elapsed:.0f}s"
    assert verdict(6, "treatment effect", ok, detail), detail + "; " + "; ".join(lines)


# 7 -----------------------------------------------------------------------------


def test_criterion_7_closest_distance(verdict, sweeps):
    (res, _, _), _ = sweeps
    cells = _cells(res.rows)
    wins = 0
    for grp in cells.values():
        treat = statistics.fmean(r.closest_distance_mean for r in grp)
        ctl = statistics.fmean(r.control_closest_distance_mean for r in grp)
        wins += treat >= ctl
    share = wins / len(cells)
    at10 = [r.closest_distance_mean for r in res.rows if r.n_timestamps == 10 and math.isfinite(r.closest_distance_mean)]
    avg = statistics.fmean(at10)
    ok = share >= 0.8 and 0.156 / 2 <= avg <= 0.156 * 2
    detail = f"treatment >= control on {wins}/{len(cells)} cells, mean closest at 10 timestamps {avg:.3f} m"
    assert verdict(7, "closest-distance effect", ok, detail), detail


# 8 -----------------------------------------------------------------------------


def test_criterion_8_training_complexity(verdict):
    w = spawn(WorldConfig(n_moving=20, seed=8))
    points = []
    for m in (50, 100, 200, 400):
        # planner-like 0.5 m edges; uniform waypoints make edges span the box
        traj = zigzag(m, w.bounds, seed=m, step=0.5)
        for n in (10, 20, 40):
            best = math.inf
            for _ in range(3):
                t0 = time.perf_counter()
                train(w, traj, TrainingConfig(n_timestamps=n))
                best = min(best, time.perf_counter() - t0)
            points.append((m * n, best))
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    worst = float(np.max(np.abs(y - fitted) / fitted))
    ok = slope > 0 and worst <= 0.30
    detail = f"t = {slope * 1e6:.2f} us * m*n + {intercept * 1e3:.1f} ms, worst relative residual {worst:.1%}"
    assert verdict(8, "training complexity", ok, detail), detail


# 9 -----------------------------------------------------------------------------


def test_criterion_9_determinism(verdict, sweeps):
    (_, first, _), (_, second, _) = sweeps
    a, b = first.read_bytes(), second.read_bytes()
    ok = a == b and len(a.splitlines()) == 201
    detail = f"{len(a)} vs {len(b)} bytes, identical={a == b}"
    assert verdict(9, "determinism", ok, detail), detail


# 10 ----------------------------------------------------------------------------


def test_criterion_10_planner_validity(verdict):
    invalid = []
    for seed in range(100):
        cfg = WorldConfig(n_moving=0, n_static=2 + seed % 3, seed=seed)
        w = spawn(cfg)
        try:
            traj = plan(w, cfg.start, cfg.goal, PlannerConfig(seed=seed))
            check_invariants(traj, w, cfg.start, cfg.goal)
        except (AssertionError, PlanningFailed):
            invalid.append(seed)
    sealed_ok = 0
    goals = [Point3(4, 4, 4), Point3(2.5, 2.5, 2.5), Point3(1.5, 3.5, 4.0)]
    for i, goal in enumerate(goals):
        try:
            plan(sealed_goal_world(goal), Point3(0.5, 0.5, 0.5), goal, PlannerConfig(seed=i))
        except PlanningFailed:
            sealed_ok += 1
    ok = not invalid and sealed_ok == len(goals)
    detail = f"invalid plans {invalid} of 100, sealed goals rejected {sealed_ok}/{len(goals)}"
    assert verdict(10, "planner validity", ok, detail), detail
