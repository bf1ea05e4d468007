"""Trajectory timing: schedule-preserving and as-fast-as-possible modes.

The planned mode keeps the planner's edge schedule: each waypoint is reached
exactly when its outgoing connection departs, so a delayed connection slows
the previous one uniformly instead of parking the robot next to a human;
only the start node may hold. The fast mode retimes the same waypoints at
the per-joint velocity-limited minimum and relies entirely on the runtime
safety controller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .edge_cost import nominal_time
from .planner import PathSolution
from .robot import RobotModel

MODE_PLANNED = "planned"
MODE_FAST = "fast"

_CHAIN_TOL = 1e-9

# Gaps between an edge's arrival and the next departure up to this long are
# absorbed by slowing the incoming connection (no stop near the human); longer
# gaps become explicit holds at the waypoint, which the planner has already
# verified stays clear of predicted occupancy for the whole wait.
HOLD_GAP = 1.0


@dataclass
class TimedTrajectory:
    """Waypoints with arrival times and per-connection velocity limits."""

    waypoints: list[np.ndarray]
    times: np.ndarray  # arrival time per waypoint; times[0] is the start hold
    vel_limits: list[np.ndarray]  # per connection, per joint, rad/s
    mode: str

    @property
    def initial_wait(self) -> float:
        return float(self.times[0])

    @property
    def total_duration(self) -> float:
        return float(self.times[-1])

    @property
    def n_connections(self) -> int:
        return len(self.waypoints) - 1

    def config_at(self, t: float) -> np.ndarray:
        """Configuration at time t under the constant-velocity profiles."""
        times = self.times
        if t <= times[0]:
            return self.waypoints[0].copy()
        if t >= times[-1]:
            return self.waypoints[-1].copy()
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = min(k, len(self.waypoints) - 2)
        span = times[k + 1] - times[k]
        alpha = 0.0 if span <= 0 else (t - times[k]) / span
        return self.waypoints[k] + alpha * (self.waypoints[k + 1] - self.waypoints[k])

    def validate(self, model: RobotModel | None = None) -> None:
        if len(self.waypoints) != len(self.times):
            raise ValueError("waypoint/time count mismatch")
        if len(self.vel_limits) != self.n_connections:
            raise ValueError("velocity limit count mismatch")
        diffs = np.diff(self.times)
        if np.any(diffs <= 0):
            raise ValueError("arrival times must be strictly increasing")
        if model is not None:
            for k in range(self.n_connections):
                speed = np.abs(self.waypoints[k + 1] - self.waypoints[k]) / diffs[k]
                if np.any(speed > model.max_vel * (1 + 1e-9)):
                    raise ValueError(f"connection {k} exceeds joint velocity limits")


def parameterize_planned(path: PathSolution, hold_gap: float = HOLD_GAP) -> TimedTrajectory:
    """Timing straight from the planner's schedule.

    Waypoint k is reached at its outgoing connection's departure time, the
    final waypoint at the last arrival, so a short wait before a delayed
    connection slows the incoming connection uniformly instead of parking
    the robot near a human. Waits longer than ``hold_gap`` become explicit
    holds at the waypoint: a long creep toward the human would be frozen by
    the runtime safety controller and lose the schedule, while a parked
    robot resumes on time. The start hold equals the first connection's
    departure. Raises when the path's timings do not chain.
    """
    if len(path.waypoints) < 2 or len(path.timings) != len(path.waypoints) - 1:
        raise ValueError("path must carry one timing per connection")
    for prev, nxt in zip(path.timings[:-1], path.timings[1:]):
        if nxt.t_p < prev.t_c - _CHAIN_TOL:
            raise ValueError(
                f"timings do not chain: departure {nxt.t_p} precedes arrival {prev.t_c}"
            )
    waypoints = [np.asarray(path.waypoints[0], dtype=float).copy()]
    times = [path.timings[0].t_p]
    for k, timing in enumerate(path.timings):
        wp = np.asarray(path.waypoints[k + 1], dtype=float).copy()
        if k + 1 < len(path.timings):
            depart_next = path.timings[k + 1].t_p
        else:
            depart_next = timing.t_c
        if depart_next - timing.t_c > hold_gap:
            # arrive on the edge's own schedule, then hold in place
            waypoints.append(wp)
            times.append(timing.t_c)
            waypoints.append(wp.copy())
            times.append(depart_next)
        else:
            waypoints.append(wp)
            times.append(depart_next)
    times_arr = np.array(times, dtype=float)
    vel_limits = [
        np.abs(waypoints[k + 1] - waypoints[k]) / (times_arr[k + 1] - times_arr[k])
        for k in range(len(waypoints) - 1)
    ]
    return TimedTrajectory(
        waypoints=waypoints, times=times_arr, vel_limits=vel_limits, mode=MODE_PLANNED
    )


def parameterize_fast(path: PathSolution, model: RobotModel) -> TimedTrajectory:
    """As-fast-as-possible retiming of the path's waypoints, no waiting.

    Each connection runs at its velocity-limited minimum duration; avoidance
    intervals are deliberately ignored, mirroring baselines that depend on
    the runtime safety controller alone.
    """
    waypoints = [np.asarray(w, dtype=float).copy() for w in path.waypoints]
    times = np.zeros(len(waypoints))
    for k in range(len(waypoints) - 1):
        times[k + 1] = times[k] + nominal_time(model, waypoints[k], waypoints[k + 1])
    vel_limits = [
        np.abs(waypoints[k + 1] - waypoints[k]) / (times[k + 1] - times[k])
        for k in range(len(waypoints) - 1)
    ]
    return TimedTrajectory(
        waypoints=waypoints, times=times, vel_limits=vel_limits, mode=MODE_FAST
    )


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def trajectory_to_dict(traj: TimedTrajectory) -> dict:
    return {
        "mode": traj.mode,
        "initial_wait": float(traj.times[0]),
        "times": [float(t) for t in traj.times],
        "waypoints": [[float(v) for v in w] for w in traj.waypoints],
        "velocity_limits": [[float(v) for v in lim] for lim in traj.vel_limits],
    }


def trajectory_from_dict(doc: dict) -> TimedTrajectory:
    traj = TimedTrajectory(
        waypoints=[np.asarray(w, dtype=float) for w in doc["waypoints"]],
        times=np.asarray(doc["times"], dtype=float),
        vel_limits=[np.asarray(v, dtype=float) for v in doc["velocity_limits"]],
        mode=str(doc.get("mode", MODE_PLANNED)),
    )
    traj.validate()
    return traj


def save_trajectory(traj: TimedTrajectory, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(trajectory_to_dict(traj), f, sort_keys=False)


def load_trajectory(path) -> TimedTrajectory:
    with open(path, "r", encoding="utf-8") as f:
        return trajectory_from_dict(yaml.safe_load(f))
