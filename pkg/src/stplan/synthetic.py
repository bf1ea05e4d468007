"""Deterministic parametric human motions for desk-scale scenarios.

Three motion kinds are provided: a two-arm scissor sweep that opens and
closes a passage in front of the body, a one-arm upward reach toward a
shelf, and a one-arm horizontal reach across a table. All produce valid
uniformly-sampled sequences from a shared eight-link skeleton (torso, head,
two clavicles, two straight two-segment arms).
"""

from __future__ import annotations

import math

import numpy as np

from .human import HumanMotionSample, HumanMotionSequence

KINDS = ("arm-sweep", "reach-shelf", "reach-table")

# Shared skeleton: link -> parent joint. Joint 0 is the pelvis; link i's tip
# is joint i + 1.
#   0 torso (pelvis->chest)      1 head (chest->crown)
#   2 right clavicle (chest->shoulder)  3 right upper arm  4 right forearm
#   5 left clavicle              6 left upper arm          7 left forearm
_PARENTS = (0, 1, 1, 3, 4, 1, 6, 7)
_LENGTHS = np.array([0.50, 0.25, 0.18, 0.30, 0.32, 0.18, 0.30, 0.32])
_RADII = np.array([0.12, 0.10, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05])

_UP = np.array([0.0, 0.0, 1.0])


def quat_from_z_to(direction: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) rotating the world z axis onto ``direction``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    c = float(np.dot(_UP, d))
    if c > 1.0 - 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    if c < -1.0 + 1e-12:
        return np.array([0.0, 1.0, 0.0, 0.0])  # half turn about x
    axis = np.cross(_UP, d)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * math.acos(max(-1.0, min(1.0, c)))
    q = np.array([math.cos(half), *(math.sin(half) * axis)])
    return q / np.linalg.norm(q)


def _rot_z(v: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]])


def generate_synthetic_human(kind: str, params: dict | None = None) -> HumanMotionSequence:
    """Build one of the bundled parametric motions.

    Common params: dt (s), period (s per cycle), cycles, amplitude_deg,
    pelvis (3,), facing (3,, horizontal direction the human reaches toward).
    """
    p = dict(params or {})
    dt = float(p.get("dt", 0.1))
    period = float(p.get("period", 10.0))
    cycles = int(p.get("cycles", 2))
    amplitude = math.radians(float(p.get("amplitude_deg", 45.0)))
    pelvis = np.asarray(p.get("pelvis", (0.9, 0.0, 0.0)), dtype=float)
    facing = np.asarray(p.get("facing", (-1.0, 0.0, 0.0)), dtype=float)
    facing = facing / np.linalg.norm(facing)
    # Voxelization tests cell centers only; padding the capsule radii by
    # about half a cell diagonal restores conservative coverage.
    radius_pad = float(p.get("radius_pad", 0.0))
    radii = _RADII + radius_pad
    if kind not in KINDS:
        raise ValueError(f"unknown synthetic human kind {kind!r}; choose from {KINDS}")
    if dt <= 0 or period <= 0 or cycles < 1:
        raise ValueError("dt, period must be positive and cycles >= 1")

    n_steps = int(round(cycles * period / dt))
    times = np.arange(n_steps + 1) * dt

    side = np.cross(_UP, facing)  # horizontal, to the human's reaching plane side
    side = side / np.linalg.norm(side)
    arm_len = _LENGTHS[3] + _LENGTHS[4]
    # Arms converge so the hands meet on the facing plane through the pelvis.
    inward = _LENGTHS[2] / arm_len

    samples = []
    for t in times:
        phase = 0.5 * (1.0 - math.cos(2.0 * math.pi * t / period))  # 0 -> 1 -> 0
        quats = np.zeros((8, 4))
        quats[0] = quat_from_z_to(_UP)  # torso upright
        quats[1] = quat_from_z_to(_UP)  # head
        quats[2] = quat_from_z_to(side)  # right clavicle
        quats[5] = quat_from_z_to(-side)  # left clavicle

        if kind == "arm-sweep":
            # Palms together ahead of the chest, scissoring apart by the
            # amplitude: right arm up, left arm down, and back per cycle.
            base_r = facing - inward * side
            base_l = facing + inward * side
            angle = amplitude * phase
            dir_r = _rot_about_horizontal(base_r, side, -angle)
            dir_l = _rot_about_horizontal(base_l, side, +angle)
            quats[3] = quats[4] = quat_from_z_to(dir_r)
            quats[6] = quats[7] = quat_from_z_to(dir_l)
        elif kind == "reach-shelf":
            # Right arm rises from hanging at the side to an up-forward
            # reach at the amplitude elevation; left arm stays down. The
            # reach converges toward the body midline like the sweep does.
            rest = math.radians(-75.0)
            dir_r = _elevated(facing, rest + (amplitude - rest) * phase) - inward * side
            quats[3] = quats[4] = quat_from_z_to(dir_r)
            quats[6] = quats[7] = quat_from_z_to(-_UP + 0.05 * facing)
        else:  # reach-table
            # Right arm sweeps horizontally across the table by the
            # amplitude; left arm stays down.
            dir_r = _rot_z(facing - inward * side, -amplitude * phase)
            quats[3] = quats[4] = quat_from_z_to(dir_r)
            quats[6] = quats[7] = quat_from_z_to(-_UP + 0.05 * facing)

        samples.append(
            HumanMotionSample(
                t=float(t),
                pelvis=pelvis.copy(),
                link_quats=quats,
                link_lengths=_LENGTHS.copy(),
                link_radii=radii.copy(),
            )
        )

    seq = HumanMotionSequence(
        parents=_PARENTS,
        samples=tuple(samples),
        dt=dt,
        t_end=float(times[-1]),
    )
    seq.validate()
    return seq


def _rot_about_horizontal(v: np.ndarray, side: np.ndarray, angle: float) -> np.ndarray:
    """Rotate ``v`` about the horizontal ``side`` axis by ``angle`` (Rodrigues)."""
    k = side / np.linalg.norm(side)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(k, v) * s + k * float(np.dot(k, v)) * (1.0 - c)


def _elevated(facing: np.ndarray, elevation: float) -> np.ndarray:
    """Unit direction in the facing/up plane at the given elevation angle."""
    return math.cos(elevation) * facing + math.sin(elevation) * _UP


def perturb_sequence(
    seq: HumanMotionSequence,
    time_shift: float = 0.0,
    jitter_std: float = 0.0,
    seed: int = 0,
) -> HumanMotionSequence:
    """Emulate live-human variation: delay the motion and jitter the pelvis.

    A positive ``time_shift`` delays the motion by whole prediction steps
    (the pose at t becomes the predicted pose at t - shift, clamped at the
    ends); ``jitter_std`` adds per-sample Gaussian pelvis noise.
    """
    rng = np.random.default_rng(seed)
    shift_steps = int(round(time_shift / seq.dt))
    n = len(seq.samples)
    samples = []
    for k, s in enumerate(seq.samples):
        src = seq.samples[min(max(k - shift_steps, 0), n - 1)]
        pelvis = src.pelvis + (
            rng.normal(0.0, jitter_std, size=3) if jitter_std > 0 else 0.0
        )
        samples.append(
            HumanMotionSample(
                t=s.t,
                pelvis=np.asarray(pelvis, dtype=float),
                link_quats=src.link_quats.copy(),
                link_lengths=src.link_lengths.copy(),
                link_radii=src.link_radii.copy(),
            )
        )
    out = HumanMotionSequence(
        parents=seq.parents, samples=tuple(samples), dt=seq.dt, t_end=seq.t_end
    )
    out.validate()
    return out
