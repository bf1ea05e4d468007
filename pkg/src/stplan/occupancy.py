"""Voxel grid and the spatio-temporal occupancy map.

The map assigns every grid voxel a sorted, disjoint list of avoidance
intervals (times when any predicted human occupies it) and a last-pass time:
once a voxel is occupied at the final prediction step it is assumed occupied
forever, so its open-ended interval's start is the last moment passage is
allowed. The map also keeps per-timestep human reference points (joints and
limb midpoints) with finite-difference velocities for speed-and-separation
monitoring.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .human import (
    HumanMotionSequence,
    human_forward_kinematics,
    joint_and_centroid_points,
)
from .intervals import Interval, merge_intervals, open_ended_start

_EMPTY: list[Interval] = []


@dataclass(frozen=True)
class VoxelGrid:
    """Axis-aligned voxel grid; cell (i, j, k) spans origin + [idx, idx+1) * res."""

    origin: np.ndarray  # (3,) min corner, meters
    resolution: float  # meters per cell
    dims: tuple[int, int, int]

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("grid resolution must be positive")
        if any(d < 1 for d in self.dims):
            raise ValueError("grid dims must all be >= 1")

    @property
    def n_cells(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def flatten_index(self, ijk: np.ndarray) -> np.ndarray:
        """(N, 3) integer indices -> (N,) flat indices."""
        nx, ny, nz = self.dims
        return (ijk[..., 0] * ny + ijk[..., 1]) * nz + ijk[..., 2]

    def point_to_index(self, point: np.ndarray) -> tuple[int, int, int] | None:
        """Containing cell of a world point, or None when outside the grid."""
        rel = (np.asarray(point, dtype=float) - self.origin) / self.resolution
        ijk = np.floor(rel).astype(int)
        if np.any(ijk < 0) or np.any(ijk >= self.dims):
            return None
        return (int(ijk[0]), int(ijk[1]), int(ijk[2]))

    def centers_in_box(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Voxel centers inside world AABB [lo, hi], clipped to the grid.

        Returns (flat_indices (N,), centers (N, 3)); N may be zero.
        """
        lo_idx = np.floor((lo - self.origin) / self.resolution).astype(int)
        hi_idx = np.floor((hi - self.origin) / self.resolution).astype(int)
        lo_idx = np.maximum(lo_idx, 0)
        hi_idx = np.minimum(hi_idx, np.asarray(self.dims) - 1)
        if np.any(lo_idx > hi_idx):
            return np.empty(0, dtype=int), np.empty((0, 3))
        ii, jj, kk = np.meshgrid(
            np.arange(lo_idx[0], hi_idx[0] + 1),
            np.arange(lo_idx[1], hi_idx[1] + 1),
            np.arange(lo_idx[2], hi_idx[2] + 1),
            indexing="ij",
        )
        ijk = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
        centers = self.origin + (ijk + 0.5) * self.resolution
        return self.flatten_index(ijk), centers


def capsule_voxels(
    grid: VoxelGrid, seg_a: np.ndarray, seg_b: np.ndarray, radius: float
) -> np.ndarray:
    """Flat indices of voxels whose centers lie within ``radius`` of segment a-b."""
    lo = np.minimum(seg_a, seg_b) - radius
    hi = np.maximum(seg_a, seg_b) + radius
    flat, centers = grid.centers_in_box(lo, hi)
    if flat.size == 0:
        return flat
    u = seg_b - seg_a
    uu = float(u @ u)
    if uu == 0.0:
        d2 = np.sum((centers - seg_a) ** 2, axis=1)
    else:
        t = np.clip((centers - seg_a) @ u / uu, 0.0, 1.0)
        closest = seg_a + t[:, None] * u
        d2 = np.sum((centers - closest) ** 2, axis=1)
    return flat[d2 <= radius * radius]


def voxelize_pose(
    joints: np.ndarray,
    sample,
    grid: VoxelGrid,
    parents: tuple[int, ...],
) -> set[int]:
    """Voxels covered by the capsule links of one posed human sample.

    A voxel counts as covered when its center is within the link radius of
    the link's axis segment; the point-to-segment test gives each capsule
    hemispherical end caps. Voxels outside the grid are dropped.
    """
    covered: set[int] = set()
    for i, p in enumerate(parents):
        flat = capsule_voxels(grid, joints[p], joints[i + 1], float(sample.link_radii[i]))
        covered.update(int(v) for v in flat)
    return covered


@dataclass(frozen=True)
class SsmTrack:
    """Per-timestep human reference points for one obstacle."""

    times: np.ndarray  # (T,)
    points: np.ndarray  # (T, P, 3)
    velocities: np.ndarray  # (T, P, 3)
    dt: float

    def index_at(self, t: float) -> int:
        idx = int(round((t - float(self.times[0])) / self.dt))
        return min(max(idx, 0), len(self.times) - 1)


@dataclass
class OccupancyMap:
    """Spatio-temporal avoidance data over a voxel grid."""

    grid: VoxelGrid
    intervals: dict[int, list[Interval]]
    last_pass: dict[int, float]
    tracks: tuple[SsmTrack, ...]
    dt: float
    t_end: float
    max_human_speed: float = field(default=0.0)

    def voxel_intervals(self, flat: int) -> list[Interval]:
        return self.intervals.get(flat, _EMPTY)

    def voxel_last_pass(self, flat: int) -> float:
        return self.last_pass.get(flat, math.inf)

    def query_point(self, point) -> tuple[list[Interval], float]:
        """Avoidance intervals and last-pass time of the containing voxel.

        Points outside the grid are unconstrained: (no intervals, +inf).
        """
        ijk = self.grid.point_to_index(point)
        if ijk is None:
            return _EMPTY, math.inf
        flat = int(self.grid.flatten_index(np.asarray(ijk)))
        return self.voxel_intervals(flat), self.voxel_last_pass(flat)

    def human_points_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """All obstacles' reference points and velocities nearest to time t.

        Beyond each obstacle's prediction horizon its final pose persists.
        """
        if not self.tracks:
            return np.empty((0, 3)), np.empty((0, 3))
        pts = []
        vels = []
        for track in self.tracks:
            k = track.index_at(t)
            pts.append(track.points[k])
            vels.append(track.velocities[k])
        return np.vstack(pts), np.vstack(vels)

    @property
    def has_humans(self) -> bool:
        return bool(self.tracks)


def build_ssm_track(seq: HumanMotionSequence) -> SsmTrack:
    """Reference-point track (joints and limb midpoints) for one sequence."""
    return _build_track(seq)


def _build_track(seq: HumanMotionSequence) -> SsmTrack:
    times = np.array([s.t for s in seq.samples])
    pts = np.stack(
        [
            joint_and_centroid_points(
                human_forward_kinematics(s, seq.parents), seq.parents
            )
            for s in seq.samples
        ]
    )
    vels = np.zeros_like(pts)
    if len(seq.samples) > 1:
        vels[1:-1] = (pts[2:] - pts[:-2]) / (2.0 * seq.dt)
        vels[0] = (pts[1] - pts[0]) / seq.dt
        vels[-1] = (pts[-1] - pts[-2]) / seq.dt
    return SsmTrack(times=times, points=pts, velocities=vels, dt=seq.dt)


def build_occupancy_map(
    sequences: HumanMotionSequence | Iterable[HumanMotionSequence],
    grid: VoxelGrid,
) -> OccupancyMap:
    """Build the avoidance-interval map from one or more predicted obstacles.

    Per obstacle, consecutive occupied timesteps of a voxel merge into one
    closed interval; an interval still occupied at the obstacle's final step
    becomes open-ended and caps the voxel's last-pass time at its start.
    Interval sets from multiple obstacles are unioned per voxel.
    """
    if isinstance(sequences, HumanMotionSequence):
        sequences = [sequences]
    seqs = list(sequences)

    raw: dict[int, list[Interval]] = {}
    tracks = []
    for seq in seqs:
        seq.validate()
        tracks.append(_build_track(seq))
        # (run_start_step, last_step) per voxel for the run currently open
        active: dict[int, tuple[int, int]] = {}
        runs: dict[int, list[tuple[int, int]]] = {}
        any_covered = False
        for k, sample in enumerate(seq.samples):
            joints = human_forward_kinematics(sample, seq.parents)
            covered = voxelize_pose(joints, sample, grid, seq.parents)
            any_covered = any_covered or bool(covered)
            for v in covered:
                run = active.get(v)
                if run is not None and run[1] == k - 1:
                    active[v] = (run[0], k)
                else:
                    if run is not None:
                        runs.setdefault(v, []).append(run)
                    active[v] = (k, k)
        for v, run in active.items():
            runs.setdefault(v, []).append(run)
        if not any_covered:
            warnings.warn(
                "predicted human motion never intersects the voxel grid; "
                "occupancy map will be empty for this obstacle",
                stacklevel=2,
            )
        last_step = len(seq.samples) - 1
        for v, run_list in runs.items():
            lst = raw.setdefault(v, [])
            for k0, k1 in run_list:
                t_s = seq.samples[k0].t
                t_f = math.inf if k1 == last_step else seq.samples[k1].t
                lst.append((t_s, t_f))

    intervals = {v: merge_intervals(lst) for v, lst in raw.items()}
    last_pass = {}
    for v, lst in intervals.items():
        start = open_ended_start(lst)
        if math.isfinite(start):
            last_pass[v] = start

    max_speed = 0.0
    for track in tracks:
        if track.velocities.size:
            max_speed = max(max_speed, float(np.max(np.linalg.norm(track.velocities, axis=2))))

    return OccupancyMap(
        grid=grid,
        intervals=intervals,
        last_pass=last_pass,
        tracks=tuple(tracks),
        dt=min((s.dt for s in seqs), default=0.1),
        t_end=max((s.t_end for s in seqs), default=0.0),
        max_human_speed=max_speed,
    )
