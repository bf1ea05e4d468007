"""Edge costs: avoidance data, slowdown-aware durations, passage windows.

An edge between configurations inherits the avoidance intervals and last-pass
time of every voxel it sweeps. Its traversal time is the per-joint
velocity-limited minimum, inflated segment by segment wherever the SSM speed
bound would throttle the robot below its planned speed. The earliest passage
window then slides the departure past any colliding interval (plus padding),
rejecting edges that stay blocked past their last-pass time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .intervals import Interval, first_overlap, merge_intervals
from .occupancy import OccupancyMap
from .robot import (
    RobotModel,
    discretize_edge,
    fk_and_jacobians_batch,
    fk_points,
    jacobian_point,
    swept_flat_voxels,
)
from .ssm import SsmParams, worst_speed_ratios

# Rounds allowed for the departure-time/duration fixed point before an edge
# is declared infeasible (duration depends on departure time and vice versa).
COUPLING_ROUNDS = 8


@dataclass(frozen=True)
class EdgeAvoidance:
    """Avoidance intervals and last-pass time inherited by an edge."""

    intervals: tuple[Interval, ...]
    last_pass: float


@dataclass(frozen=True)
class EdgeTiming:
    """Departure/arrival schedule for one edge."""

    t_p: float
    t_c: float
    duration: float


NO_AVOIDANCE = EdgeAvoidance(intervals=(), last_pass=math.inf)


def nominal_time(model: RobotModel, q_p: np.ndarray, q_c: np.ndarray) -> float:
    """Fastest possible edge traversal time under per-joint velocity limits."""
    delta = np.abs(np.asarray(q_c, dtype=float) - np.asarray(q_p, dtype=float))
    return float(np.max(delta / model.max_vel))


def edge_avoidance(
    occ_map: OccupancyMap,
    model: RobotModel,
    q_p: np.ndarray,
    q_c: np.ndarray,
    dq: float,
) -> EdgeAvoidance:
    """Merged avoidance intervals over the voxels swept by the edge."""
    if not occ_map.intervals:
        return NO_AVOIDANCE
    voxels = swept_flat_voxels(model, q_p, q_c, occ_map.grid, dq)
    collected: list[Interval] = []
    last_pass = math.inf
    lookup = occ_map.intervals
    for v in voxels.tolist():
        ivs = lookup.get(v)
        if ivs:
            collected.extend(ivs)
            last_pass = min(last_pass, occ_map.last_pass.get(v, math.inf))
    if not collected:
        return NO_AVOIDANCE
    return EdgeAvoidance(tuple(merge_intervals(collected)), last_pass)


def robot_tangential_speed(
    model: RobotModel,
    q: np.ndarray,
    q_p: np.ndarray,
    q_c: np.ndarray,
    nominal: float,
    human_point: np.ndarray,
    point_index: int,
) -> float:
    """Speed of one robot body point toward a human point at nominal pace.

    Positive when the point closes on the human. The caller must handle
    coincident points (zero separation) as a zero speed bound instead.
    """
    if nominal <= 0:
        raise ValueError("nominal edge time must be positive")
    x = fk_points(model, q)[point_index]
    sep = np.asarray(human_point, dtype=float) - x
    dist = float(np.linalg.norm(sep))
    if dist == 0.0:
        raise ValueError("human point coincides with the robot point")
    qdot = (np.asarray(q_c, dtype=float) - np.asarray(q_p, dtype=float)) / nominal
    vel = jacobian_point(model, q, point_index) @ qdot
    return float(vel @ (sep / dist))


def _human_at_times(occ_map: OccupancyMap, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Human points/velocities (M, H, 3) at the prediction steps nearest ``times``."""
    pts = []
    vels = []
    for track in occ_map.tracks:
        idx = np.rint((times - float(track.times[0])) / track.dt).astype(int)
        idx = np.clip(idx, 0, len(track.times) - 1)
        pts.append(track.points[idx])
        vels.append(track.velocities[idx])
    return np.concatenate(pts, axis=1), np.concatenate(vels, axis=1)


@dataclass(frozen=True)
class EdgeGeometry:
    """Departure-independent data for slowdown evaluation of one edge."""

    nominal: float
    seg_nominal: float
    pts: np.ndarray  # (M, P, 3) body points at segment midpoints
    rvels: np.ndarray  # (M, P, 3) body-point velocities at nominal pace

    @property
    def n_seg(self) -> int:
        return self.pts.shape[0]


def edge_geometry(
    model: RobotModel, q_p: np.ndarray, q_c: np.ndarray, dq_step: float
) -> EdgeGeometry:
    """Sample the edge at ``dq_step`` and precompute midpoint kinematics."""
    nominal = nominal_time(model, q_p, q_c)
    configs = discretize_edge(q_p, q_c, dq_step)
    if len(configs) < 2:
        mids = configs
    else:
        mids = 0.5 * (configs[:-1] + configs[1:])
    pts, jac = fk_and_jacobians_batch(model, mids)
    if nominal > 0.0:
        qdot = (np.asarray(q_c, dtype=float) - np.asarray(q_p, dtype=float)) / nominal
        rvels = np.einsum("mpkn,n->mpk", jac, qdot)
    else:
        rvels = np.zeros_like(pts)
    return EdgeGeometry(
        nominal=nominal, seg_nominal=nominal / len(mids), pts=pts, rvels=rvels
    )


_SEGMENT_CHUNK = 16


def _lookahead_minima(
    geom: EdgeGeometry,
    occ_map: OccupancyMap,
    ratios: np.ndarray,
    t_seg: np.ndarray,
    seg_offset: int,
    params: SsmParams,
    t_limit: float,
) -> None:
    """Replace over-threshold segment ratios by their lookahead-window minima.

    The window never samples past ``t_limit``; ratios that stay infinite
    mean the segment is blocked for good at this schedule.
    """
    flagged = np.nonzero(ratios > params.ratio_threshold)[0]
    if not flagged.size:
        return
    offsets = np.arange(0.0, params.lookahead + 0.5 * occ_map.dt, occ_map.dt)
    windows = []
    for k in flagged:
        w = t_seg[k] + offsets
        windows.append(w[w <= max(t_limit, t_seg[k])])
    counts = np.array([len(w) for w in windows])
    if not np.any(counts > 1):
        return
    w_pts, w_vels = _human_at_times(occ_map, np.concatenate(windows))
    w_ratios = worst_speed_ratios(
        np.repeat(geom.pts[seg_offset + flagged], counts, axis=0),
        np.repeat(geom.rvels[seg_offset + flagged], counts, axis=0),
        w_pts,
        w_vels,
        params,
    )
    pos = 0
    for k, count in zip(flagged, counts):
        if count > 1:
            ratios[k] = float(np.min(w_ratios[pos : pos + count]))
        pos += count


def ssm_time_of_geometry(
    geom: EdgeGeometry,
    occ_map: OccupancyMap,
    t_p: float,
    params: SsmParams,
    t_limit: float = math.inf,
) -> float:
    """Slowdown-adjusted duration of a precomputed edge departing at ``t_p``.

    Segments are evaluated in chunks so a confirmed-blocked segment aborts
    the edge without paying for the rest.
    """
    if geom.nominal == 0.0 or not occ_map.has_humans:
        return geom.nominal
    n = geom.n_seg
    t_mid = t_p + (np.arange(n) + 0.5) * geom.seg_nominal
    total = 0.0
    for lo in range(0, n, _SEGMENT_CHUNK):
        hi = min(lo + _SEGMENT_CHUNK, n)
        h_pts, h_vels = _human_at_times(occ_map, t_mid[lo:hi])
        ratios = worst_speed_ratios(
            geom.pts[lo:hi], geom.rvels[lo:hi], h_pts, h_vels, params
        )
        _lookahead_minima(geom, occ_map, ratios, t_mid[lo:hi], lo, params, t_limit)
        if np.any(np.isinf(ratios)):
            return math.inf
        total += float(np.sum(ratios))
    return total * geom.seg_nominal


def ssm_adjusted_time(
    occ_map: OccupancyMap,
    model: RobotModel,
    q_p: np.ndarray,
    q_c: np.ndarray,
    t_p: float,
    params: SsmParams,
    t_limit: float = math.inf,
) -> float:
    """Edge duration inflated by anticipated SSM slowdowns.

    Discretizes the edge at ``dq_step`` and scales every segment's nominal
    time by the worst robot/human speed ratio at the segment's nominal
    arrival time (ratios below 1 never shorten it). When a segment's ratio
    exceeds the threshold, predictions over the lookahead window may lower
    it (a temporary delay); lookahead never samples past ``t_limit``.
    Returns +inf when a segment stays fully blocked.
    """
    if not occ_map.has_humans:
        return nominal_time(model, q_p, q_c)
    geom = edge_geometry(model, q_p, q_c, params.dq_step)
    return ssm_time_of_geometry(geom, occ_map, t_p, params, t_limit)


def earliest_passage(
    avoid: EdgeAvoidance,
    t_arr_parent: float,
    duration: float,
    params: SsmParams,
) -> EdgeTiming | None:
    """Earliest collision-free window for the edge, or None when blocked.

    Starts at the parent's arrival time; while the window hits an avoidance
    interval, departure moves to that interval's end plus ``t_pad``. The
    edge is rejected once departure or arrival would exceed its last-pass
    time (the edge is then blocked indefinitely).
    """
    t_p = t_arr_parent
    t_c = t_p + duration
    lp = avoid.last_pass
    if t_p > lp or t_c > lp:
        return None
    for s, f in avoid.intervals:
        if s > t_c:
            break
        if f >= t_p:
            t_p = f + params.t_pad
            t_c = t_p + duration
            if t_p > lp or t_c > lp:
                return None
    return EdgeTiming(t_p=t_p, t_c=t_c, duration=duration)


def timed_edge(
    occ_map: OccupancyMap,
    model: RobotModel,
    q_p: np.ndarray,
    q_c: np.ndarray,
    t_arr_parent: float,
    avoid: EdgeAvoidance,
    params: SsmParams,
    hold_avoid: EdgeAvoidance | None = None,
) -> EdgeTiming | None:
    """Consistent edge schedule: duration and departure agree at a fixed point.

    The window is first scheduled with the nominal duration, then the
    slowdown-aware duration at the scheduled departure replaces it and the
    schedule is redone, until both departure and duration settle. Edges
    whose scheduled departure stays proximity-blocked (infinite duration)
    or that do not settle within COUPLING_ROUNDS are infeasible.

    ``hold_avoid``, when given, carries the parent configuration's own
    avoidance data: a departure later than the parent's arrival means the
    robot lingers there, so the hold span must not intersect the parent's
    intervals (waiting inside someone's predicted path is not a schedule).
    """
    geom = edge_geometry(model, q_p, q_c, params.dq_step) if occ_map.has_humans else None
    depart = t_arr_parent
    duration = geom.nominal if geom is not None else nominal_time(model, q_p, q_c)
    for _ in range(COUPLING_ROUNDS):
        timing = earliest_passage(avoid, depart, duration, params)
        if timing is None:
            return None
        if hold_avoid is not None and timing.t_p > t_arr_parent:
            if first_overlap(list(hold_avoid.intervals), t_arr_parent, timing.t_p):
                return None
        if geom is None:
            return timing
        new_duration = ssm_time_of_geometry(
            geom, occ_map, timing.t_p, params, t_limit=avoid.last_pass
        )
        if math.isinf(new_duration):
            if timing.t_p > depart:
                depart = timing.t_p  # rescheduled once more from the pushed departure
                continue
            return None
        if timing.t_p == depart and abs(new_duration - duration) <= 1e-9:
            return EdgeTiming(
                t_p=timing.t_p, t_c=timing.t_p + new_duration, duration=new_duration
            )
        depart = timing.t_p
        duration = new_duration
    return None
