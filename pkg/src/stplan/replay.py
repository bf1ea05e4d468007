"""Replay validation: check a timed trajectory against the occupancy map.

Samples the trajectory on a fixed time step and reports every instant at
which a robot body sphere sits inside a voxel during one of that voxel's
avoidance intervals. A correctly scheduled trajectory replayed against the
prediction it was planned with must report nothing.
"""

from __future__ import annotations

import numpy as np

from .intervals import intervals_contain
from .occupancy import OccupancyMap
from .robot import RobotModel, swept_flat_voxels
from .timing import TimedTrajectory


def replay_violations(
    traj: TimedTrajectory,
    model: RobotModel,
    occ_map: OccupancyMap,
    dt: float = 0.02,
) -> list[tuple[float, int]]:
    """(time, voxel) pairs where the replayed robot overlaps an interval."""
    if not occ_map.intervals:
        return []
    violations: list[tuple[float, int]] = []
    times = np.arange(0.0, traj.total_duration + 0.5 * dt, dt)
    for t in times:
        q = traj.config_at(float(t))
        for v in swept_flat_voxels(model, q, q, occ_map.grid, 1.0).tolist():
            ivs = occ_map.intervals.get(v)
            if ivs and intervals_contain(ivs, float(t)):
                violations.append((float(t), v))
    return violations
