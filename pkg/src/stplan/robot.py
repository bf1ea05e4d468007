"""Robot model: joint-chain kinematics, body-point Jacobians, edge sweeps.

A robot is a serial chain of revolute or prismatic joints, each with a fixed
translation from its parent frame and a local motion axis. Collision and
separation geometry is a set of spheres ("body points") attached to the link
frames; ``swept_voxels`` covers an edge in configuration space by sampling it
at a joint-space spacing and unioning every sphere's voxel coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .occupancy import VoxelGrid

REVOLUTE = "revolute"
PRISMATIC = "prismatic"


@dataclass(frozen=True)
class Joint:
    kind: str
    origin: np.ndarray  # (3,) translation from parent frame, meters
    axis: np.ndarray  # (3,) unit axis in the local frame
    limits: tuple[float, float]  # radians (or meters for prismatic)
    max_vel: float  # rad/s (m/s for prismatic)


@dataclass(frozen=True)
class BodyPoint:
    link: int  # frame index the point rides (0-based joint index)
    offset: np.ndarray  # (3,) in the link frame
    radius: float  # sphere radius, meters


@dataclass(frozen=True)
class RobotModel:
    name: str
    joints: tuple[Joint, ...]
    body_points: tuple[BodyPoint, ...]

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def n_points(self) -> int:
        return len(self.body_points)

    @property
    def joint_limits(self) -> np.ndarray:
        return np.array([j.limits for j in self.joints])

    @property
    def max_vel(self) -> np.ndarray:
        return np.array([j.max_vel for j in self.joints])

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("robot needs at least one joint")
        if not self.body_points:
            raise ValueError("robot needs at least one body point")
        for i, j in enumerate(self.joints):
            if j.kind not in (REVOLUTE, PRISMATIC):
                raise ValueError(f"joint {i}: unknown type {j.kind!r}")
            if j.max_vel <= 0:
                raise ValueError(f"joint {i}: max_vel must be positive")
            if j.limits[0] >= j.limits[1]:
                raise ValueError(f"joint {i}: limits must satisfy min < max")
            if abs(np.linalg.norm(j.axis) - 1.0) > 1e-9:
                raise ValueError(f"joint {i}: axis must be a unit vector")
        covered = {bp.link for bp in self.body_points}
        for bp in self.body_points:
            if not 0 <= bp.link < self.n:
                raise ValueError(f"body point link {bp.link} out of range")
            if bp.radius < 0:
                raise ValueError("body point radius must be non-negative")
        if covered != set(range(self.n)):
            missing = sorted(set(range(self.n)) - covered)
            raise ValueError(f"links {missing} carry no body point")

    def check_config(self, q: np.ndarray) -> None:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise ValueError(f"configuration must have shape ({self.n},), got {q.shape}")

    def within_limits(self, q: np.ndarray) -> bool:
        lim = self.joint_limits
        return bool(np.all(q >= lim[:, 0]) and np.all(q <= lim[:, 1]))


def _rot_about_axis(axis: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrices (M, 3, 3) about one unit axis."""
    c = np.cos(theta)
    s = np.sin(theta)
    ax, ay, az = axis
    K = np.array([[0.0, -az, ay], [az, 0.0, -ax], [-ay, ax, 0.0]])
    outer = np.outer(axis, axis)
    eye = np.eye(3)
    return (
        c[:, None, None] * eye
        + s[:, None, None] * K
        + (1.0 - c)[:, None, None] * outer
    )


def _chain_frames(model: RobotModel, Q: np.ndarray):
    """Frames, joint origins, and world axes for a batch of configurations.

    Returns (frames, origins, axes) where frames[j] = (R (M,3,3), p (M,3))
    after joint j is applied, origins[j]/axes[j] are the joint's world
    position and motion axis.
    """
    M = Q.shape[0]
    R = np.tile(np.eye(3), (M, 1, 1))
    p = np.zeros((M, 3))
    frames = []
    origins = []
    axes = []
    for j, joint in enumerate(model.joints):
        p = p + np.einsum("mij,j->mi", R, joint.origin)
        axis_w = np.einsum("mij,j->mi", R, joint.axis)
        origins.append(p)
        axes.append(axis_w)
        if joint.kind == REVOLUTE:
            R = R @ _rot_about_axis(joint.axis, Q[:, j])
        else:
            p = p + axis_w * Q[:, j][:, None]
        frames.append((R, p))
    return frames, origins, axes


def _points_by_link(model: RobotModel) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Body points grouped per link: (link, point indices, offsets (P_l, 3))."""
    groups: dict[int, list[int]] = {}
    for i, bp in enumerate(model.body_points):
        groups.setdefault(bp.link, []).append(i)
    out = []
    for link in sorted(groups):
        idx = np.array(groups[link])
        offs = np.stack([model.body_points[i].offset for i in groups[link]])
        out.append((link, idx, offs))
    return out


def fk_points_batch(model: RobotModel, Q: np.ndarray) -> np.ndarray:
    """World positions (M, P, 3) of all body points for configs Q (M, n)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    frames, _, _ = _chain_frames(model, Q)
    pts = np.empty((Q.shape[0], model.n_points, 3))
    for link, idx, offs in _points_by_link(model):
        R, p = frames[link]
        pts[:, idx] = p[:, None, :] + np.einsum("mij,pj->mpi", R, offs)
    return pts


def fk_points(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """World positions (P, 3) of all body points at configuration q."""
    model.check_config(q)
    return fk_points_batch(model, np.asarray(q, dtype=float)[None])[0]


def fk_and_jacobians_batch(model: RobotModel, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Body-point positions (M, P, 3) and translational Jacobians (M, P, 3, n)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    M = Q.shape[0]
    frames, origins, axes = _chain_frames(model, Q)
    pts = np.empty((M, model.n_points, 3))
    links = np.array([bp.link for bp in model.body_points])
    for link, idx, offs in _points_by_link(model):
        R, p = frames[link]
        pts[:, idx] = p[:, None, :] + np.einsum("mij,pj->mpi", R, offs)
    jac = np.zeros((M, model.n_points, 3, model.n))
    for j, joint in enumerate(model.joints):
        moved = (links >= j)[None, :, None]  # joints move only downstream points
        if joint.kind == REVOLUTE:
            arm = pts - origins[j][:, None, :]
            jac[:, :, :, j] = np.cross(axes[j][:, None, :], arm) * moved
        else:
            jac[:, :, :, j] = axes[j][:, None, :] * moved
    return pts, jac


def jacobian_point(model: RobotModel, q: np.ndarray, point_index: int) -> np.ndarray:
    """Translational Jacobian (3, n) of one body point at configuration q."""
    model.check_config(q)
    if not 0 <= point_index < model.n_points:
        raise ValueError(f"body point index {point_index} out of range")
    _, jac = fk_and_jacobians_batch(model, np.asarray(q, dtype=float)[None])
    return jac[0, point_index]


def discretize_edge(q_p: np.ndarray, q_c: np.ndarray, dq: float) -> np.ndarray:
    """Inclusive linear interpolation with per-joint steps of at most dq.

    Returns (M + 1, n); both endpoints are always included and a zero-length
    edge collapses to a single configuration.
    """
    q_p = np.asarray(q_p, dtype=float)
    q_c = np.asarray(q_c, dtype=float)
    if q_p.shape != q_c.shape:
        raise ValueError("edge endpoints must have equal dimension")
    span = float(np.max(np.abs(q_c - q_p)))
    if span == 0.0:
        return q_p[None].copy()
    steps = max(1, math.ceil(span / dq))
    alphas = np.linspace(0.0, 1.0, steps + 1)
    return q_p[None] + alphas[:, None] * (q_c - q_p)[None]


_STENCILS: dict[float, np.ndarray] = {}


def _sphere_stencil(radius_cells: float) -> np.ndarray:
    """Integer cell offsets a sphere of ``radius_cells`` can possibly reach.

    An offset cell is reachable only if its center can be within the radius
    of some point in the base cell, i.e. the per-axis gap max(|o| - 0.5, 0)
    summed in quadrature stays within the radius.
    """
    cached = _STENCILS.get(radius_cells)
    if cached is None:
        h = int(math.ceil(radius_cells + 0.5))
        rng = np.arange(-h, h + 1)
        oi, oj, ok = np.meshgrid(rng, rng, rng, indexing="ij")
        offs = np.stack([oi.ravel(), oj.ravel(), ok.ravel()], axis=1)
        gap = np.maximum(np.abs(offs) - 0.5, 0.0)
        cached = offs[np.sum(gap * gap, axis=1) <= radius_cells * radius_cells]
        _STENCILS[radius_cells] = cached
    return cached


def swept_flat_voxels(
    model: RobotModel,
    q_p: np.ndarray,
    q_c: np.ndarray,
    grid: VoxelGrid,
    dq: float,
) -> np.ndarray:
    """Sorted unique flat voxel indices touched along a discretized edge.

    A sphere covers the voxel containing its center plus every voxel whose
    center lies within the sphere radius; out-of-grid voxels are dropped.
    """
    configs = discretize_edge(q_p, q_c, dq)
    pts = fk_points_batch(model, configs)  # (M, P, 3)
    res = grid.resolution
    dims = np.asarray(grid.dims)
    radii = np.array([bp.radius for bp in model.body_points])
    cells = np.floor((pts - grid.origin) / res).astype(int)  # (M, P, 3)

    chunks: list[np.ndarray] = []
    inside = np.all((cells >= 0) & (cells < dims), axis=2)
    if np.any(inside):
        chunks.append(grid.flatten_index(cells[inside]))

    max_radius = float(np.max(radii))
    if max_radius > 0.0:
        stencil = _sphere_stencil(max_radius / res)  # (S, 3)
        cand = cells[:, :, None, :] + stencil[None, None, :, :]  # (M, P, S, 3)
        centers = grid.origin + (cand + 0.5) * res
        d2 = np.sum((centers - pts[:, :, None, :]) ** 2, axis=3)
        ok_mask = (d2 <= (radii**2)[None, :, None]) & np.all(
            (cand >= 0) & (cand < dims), axis=3
        )
        if np.any(ok_mask):
            chunks.append(grid.flatten_index(cand[ok_mask]))
    if not chunks:
        return np.empty(0, dtype=int)
    return np.unique(np.concatenate(chunks))


def swept_voxels(
    model: RobotModel,
    q_p: np.ndarray,
    q_c: np.ndarray,
    grid: VoxelGrid,
    dq: float,
) -> set[int]:
    """Set view of :func:`swept_flat_voxels`."""
    return {int(v) for v in swept_flat_voxels(model, q_p, q_c, grid, dq)}


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def robot_from_dict(doc: dict) -> RobotModel:
    joints = []
    for j in doc["joints"]:
        axis = np.asarray(j["axis"], dtype=float)
        norm = np.linalg.norm(axis)
        if norm > 0:
            axis = axis / norm
        joints.append(
            Joint(
                kind=j.get("type", REVOLUTE),
                origin=np.asarray(j["origin"], dtype=float),
                axis=axis,
                limits=(float(j["limits"][0]), float(j["limits"][1])),
                max_vel=float(j["max_vel"]),
            )
        )
    points = [
        BodyPoint(
            link=int(p["link"]),
            offset=np.asarray(p["offset"], dtype=float),
            radius=float(p["radius"]),
        )
        for p in doc["body_points"]
    ]
    model = RobotModel(
        name=str(doc.get("name", "robot")),
        joints=tuple(joints),
        body_points=tuple(points),
    )
    model.validate()
    return model


def load_robot(path) -> RobotModel:
    """Read a robot model from its YAML schema (see README)."""
    with open(path, "r", encoding="utf-8") as f:
        return robot_from_dict(yaml.safe_load(f))
