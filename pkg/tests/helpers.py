from poissonnav.geometry import Point3, Sphere
from poissonnav.planner import Trajectory
from poissonnav.world import MotionMode, MovingObstacle, World, WorldConfig


def straight_trajectory(n_edges=5, spacing=1.0, y=2.5, z=2.5):
    return Trajectory(tuple(Point3(0.5 + i * spacing, y, z) for i in range(n_edges + 1)))


def parked(center, radius=0.15, oid=0):
    """An obstacle that never moves."""
    c = Point3.of(center)
    return MovingObstacle(oid, Sphere(c, radius), motion_mode=MotionMode.SCRIPTED, script=lambda t, c=c: c)


def scripted(script, radius=0.15, oid=0):
    return MovingObstacle(oid, Sphere(script(0.0), radius), motion_mode=MotionMode.SCRIPTED, script=script)


def scripted_world(obstacles, **cfg):
    cfg.setdefault("n_moving", 0)
    cfg.setdefault("n_static", 0)
    return World(WorldConfig(**cfg), moving=obstacles)


def rate_model(traj, lam_x, lam_ys, interval=1.0):
    """A trained model with the given rates, bypassing observation."""
    from poissonnav.stochastic import ObservationLog, PoissonModel, Unit
    from poissonnav.trainer import TrainedModel, TrainingConfig

    return TrainedModel(
        lambda_x=PoissonModel(lam_x, Unit.PER_METER),
        lambda_y=tuple(PoissonModel(y, Unit.PER_INTERVAL) for y in lam_ys),
        n_timestamps=1,
        total_length=traj.total_length,
        trajectory_log=ObservationLog([0]),
        edge_logs=tuple(ObservationLog([0]) for _ in lam_ys),
        trajectory_hash=traj.digest(),
        config=TrainingConfig(n_timestamps=1, observation_interval=interval),
    )
