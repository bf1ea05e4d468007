"""Speed-and-separation-monitoring (SSM) speed bounds.

Implements the ISO/TS 15066-style separation rule: the allowed speed of a
robot point toward a human point grows with their distance and shrinks with
the human's approach speed, and is zero inside a minimum separation. The
ratio of the robot's planned tangential speed to this bound drives both the
planner's slowdown-aware edge times and the simulated safety controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SsmParams:
    """SSM and timing parameters.

    reaction_time: robot reaction time T_r, seconds.
    max_decel: max robot deceleration toward the human a_s, m/s^2.
    min_distance: separation below which robot speed must be zero, meters.
    ratio_threshold: slowdown ratio that triggers the lookahead check.
    lookahead: window (seconds) searched for a temporary-delay minimum.
    dq_step: joint-space spacing for edge discretization, radians.
    t_pad: slack added after an avoidance interval before passing, seconds.
    plan_margin: extra separation the planner adds to min_distance when
        estimating slowdowns, so executed runs keep headroom before the
        real controller's zero-speed fence; the controller itself never
        uses it.
    """

    reaction_time: float = 0.15
    max_decel: float = 0.1
    min_distance: float = 0.2
    ratio_threshold: float = 3.0
    lookahead: float = 1.0
    dq_step: float = 0.05
    t_pad: float = 0.2
    plan_margin: float = 0.0

    def validate(self) -> None:
        for name in (
            "reaction_time",
            "max_decel",
            "min_distance",
            "ratio_threshold",
            "lookahead",
            "dq_step",
            "t_pad",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"SSM parameter {name} must be strictly positive")
        if self.plan_margin < 0:
            raise ValueError("plan_margin must be non-negative")

    def for_planning(self) -> "SsmParams":
        """Variant with ``plan_margin`` folded into the separation fence."""
        if self.plan_margin == 0.0:
            return self
        from dataclasses import replace

        return replace(
            self, min_distance=self.min_distance + self.plan_margin, plan_margin=0.0
        )


def ssm_vmax(dist, v_h, params: SsmParams):
    """Maximum robot-point speed toward a human point at separation ``dist``.

    ``-a_s*T_r - v_h + sqrt(v_h^2 + (a_s*T_r)^2 + 2*a_s*dist)`` beyond the
    minimum separation, zero at or below it. Accepts scalars or arrays.
    """
    d = np.asarray(dist, dtype=float)
    vh = np.asarray(v_h, dtype=float)
    a_t = params.max_decel * params.reaction_time
    allowed = -a_t - vh + np.sqrt(vh * vh + a_t * a_t + 2.0 * params.max_decel * d)
    out = np.where(d > params.min_distance, allowed, 0.0)
    if np.isscalar(dist) or (isinstance(dist, np.ndarray) and dist.ndim == 0):
        return float(out)
    return out


def worst_speed_ratios(
    robot_pts: np.ndarray,
    robot_vels: np.ndarray,
    human_pts: np.ndarray,
    human_vels: np.ndarray,
    params: SsmParams,
) -> np.ndarray:
    """Worst v_robot/v_max over all human/robot point pairs, per batch entry.

    Shapes: robot_pts/robot_vels (M, P, 3), human_pts/human_vels (M, H, 3).
    Pairs where the robot point recedes from the human contribute 1 (no
    slowdown); approaching pairs with a zero speed bound contribute +inf.
    The result is clamped to >= 1: SSM never speeds the robot up.
    """
    M = robot_pts.shape[0]
    if human_pts.size == 0:
        return np.ones(M)
    # Pairwise work is phrased as batched matmuls to avoid an (M, H, P, 3)
    # temporary: D^2 = |h|^2 + |r|^2 - 2 h.r, and the projections of the
    # robot/human velocities onto the separation direction expand likewise.
    rt = np.swapaxes(robot_pts, 1, 2)  # (M, 3, P)
    hr = human_pts @ rt  # (M, H, P)
    d2 = (
        np.sum(human_pts * human_pts, axis=2)[:, :, None]
        + np.sum(robot_pts * robot_pts, axis=2)[:, None, :]
        - 2.0 * hr
    )
    dist = np.sqrt(np.maximum(d2, 0.0))
    # Coincident pairs fall in the zero-speed branch; avoid dividing by zero.
    safe = np.where(dist > 0.0, dist, 1.0)
    # v_robot = rv . (h - r) / D, positive toward the human
    rv_dot_r = np.sum(robot_vels * robot_pts, axis=2)  # (M, P)
    v_robot = (human_pts @ np.swapaxes(robot_vels, 1, 2) - rv_dot_r[:, None, :]) / safe
    # v_h = hv . (r - h) / D, floored at 0 (approaching component only)
    hv_dot_h = np.sum(human_vels * human_pts, axis=2)  # (M, H)
    v_h = np.maximum(0.0, (human_vels @ rt - hv_dot_h[:, :, None]) / safe)
    a_t = params.max_decel * params.reaction_time
    vmax = -a_t - v_h + np.sqrt(v_h * v_h + a_t * a_t + 2.0 * params.max_decel * dist)
    vmax[dist <= params.min_distance] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = v_robot / vmax
    ratios = np.where(v_robot > 0.0, np.where(vmax > 0.0, quot, math.inf), 1.0)
    return np.maximum(1.0, ratios.max(axis=(1, 2)))
