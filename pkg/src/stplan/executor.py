"""Simulated execution under a real-time SSM safety controller.

The robot follows the timed trajectory's path exactly; a per-tick speed
scale in [0, 1] throttles progress along it based on the *actual* human's
current pose and velocity, mirroring the planner's speed-ratio rule with the
prediction swapped out. Task metrics (duration, separation statistics,
forced-stop time, estimation error) are accumulated per tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .human import HumanMotionSequence
from .occupancy import SsmTrack, build_ssm_track
from .robot import RobotModel, fk_and_jacobians_batch, fk_points
from .ssm import SsmParams, worst_speed_ratios
from .timing import TimedTrajectory

DEFAULT_TICK = 0.01
TIMEOUT_FACTOR = 10.0


@dataclass
class TickLog:
    """Per-tick trace: sim time, configuration, min separation, speed scale."""

    times: list[float] = field(default_factory=list)
    configs: list[np.ndarray] = field(default_factory=list)
    separations: list[float] = field(default_factory=list)
    scales: list[float] = field(default_factory=list)


@dataclass
class ExecutionResult:
    planned_duration: float
    actual_duration: float
    estimation_error: float  # (actual - planned) / planned
    avg_separation: float
    min_separation: float
    stop_time: float  # seconds at zero commanded speed while under way
    deadlocked: bool
    log: TickLog


def separation_distance(model: RobotModel, q: np.ndarray, human_points: np.ndarray) -> float:
    """Minimum distance between any human point and any robot body point."""
    if human_points.size == 0:
        return math.inf
    pts = fk_points(model, q)
    diff = human_points[:, None, :] - pts[None, :, :]
    return float(np.min(np.linalg.norm(diff, axis=2)))


def _track_at(track: SsmTrack | None, t: float) -> tuple[np.ndarray, np.ndarray]:
    if track is None:
        return np.empty((0, 3)), np.empty((0, 3))
    k = track.index_at(t)
    return track.points[k], track.velocities[k]


def execute(
    traj: TimedTrajectory,
    model: RobotModel,
    actual_human: HumanMotionSequence | None,
    ssm: SsmParams,
    tick: float = DEFAULT_TICK,
    timeout_factor: float = TIMEOUT_FACTOR,
) -> ExecutionResult:
    """Advance the robot along the trajectory under the safety controller.

    Per tick the controller evaluates the worst robot/human speed ratio for
    the current connection's planned velocity and scales progress by its
    inverse, clamped to [0, 1]; the path geometry is never altered. The run
    deadlocks (and aborts) after ``timeout_factor`` times the planned
    duration.
    """
    if tick <= 0:
        raise ValueError("tick must be positive")
    traj.validate(model)
    track = build_ssm_track(actual_human) if actual_human is not None else None

    planned = traj.total_duration
    timeout = planned * timeout_factor
    times = traj.times
    waypoints = traj.waypoints
    n_conn = traj.n_connections

    k = 0
    s = 0.0
    t = 0.0
    stop_time = 0.0
    deadlocked = False
    finish: float | None = None
    log = TickLog()
    sep_sum = 0.0
    sep_min = math.inf

    while k < n_conn:
        if t >= timeout:
            deadlocked = True
            break
        q = waypoints[k] + s * (waypoints[k + 1] - waypoints[k])
        h_pts, h_vels = _track_at(track, t)
        if h_pts.size:
            pts, jac = fk_and_jacobians_batch(model, q[None])
            sep = float(
                np.min(np.linalg.norm(h_pts[:, None, :] - pts[0][None, :, :], axis=2))
            )
        else:
            pts, jac = None, None
            sep = math.inf

        if t + tick <= times[0]:
            move_time = 0.0  # still holding at the start by plan
            scale = 1.0
        else:
            move_time = tick if t >= times[0] else t + tick - times[0]
            span = times[k + 1] - times[k]
            planned_vel = (waypoints[k + 1] - waypoints[k]) / span
            if h_pts.size:
                rvels = np.einsum("pkn,n->pk", jac[0], planned_vel)[None]
                ratio = float(
                    worst_speed_ratios(pts, rvels, h_pts[None], h_vels[None], ssm)[0]
                )
                scale = 0.0 if math.isinf(ratio) else min(1.0, 1.0 / ratio)
            else:
                scale = 1.0

        log.times.append(t)
        log.configs.append(q)
        log.separations.append(sep)
        log.scales.append(scale)
        sep_sum += sep
        sep_min = min(sep_min, sep)

        if move_time > 0.0:
            if scale <= 0.0:
                stop_time += move_time
            else:
                remaining = move_time
                while remaining > 0.0 and k < n_conn:
                    span = times[k + 1] - times[k]
                    rate = scale / span
                    to_finish = (1.0 - s) / rate
                    if to_finish <= remaining:
                        remaining -= to_finish
                        k += 1
                        s = 0.0
                        if k >= n_conn:
                            finish = t + tick - remaining
                    else:
                        s += rate * remaining
                        remaining = 0.0
        t += tick

    actual = finish if finish is not None else t
    n_ticks = max(len(log.times), 1)
    return ExecutionResult(
        planned_duration=planned,
        actual_duration=actual,
        estimation_error=(actual - planned) / planned,
        avg_separation=sep_sum / n_ticks,
        min_separation=sep_min,
        stop_time=stop_time,
        deadlocked=deadlocked,
        log=log,
    )
