"""Predicted human motion: skeleton samples and quaternion forward kinematics.

A human is a tree of capsule-shaped links rooted at the pelvis. Each motion
sample carries the pelvis position plus one unit quaternion, length, and
radius per link; the quaternion orients the link relative to the world z
axis, so the link vector is the quaternion applied to ``length * z_hat``.
Link ``i`` hangs off joint ``parents[i]`` and its tip is joint ``i + 1``
(joint 0 is the pelvis).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

QUAT_NORM_TOL = 1e-9
_TIME_TOL = 1e-9


@dataclass(frozen=True)
class HumanMotionSample:
    """One time step of predicted human motion."""

    t: float
    pelvis: np.ndarray  # (3,) meters
    link_quats: np.ndarray  # (L, 4) unit quaternions, (w, x, y, z)
    link_lengths: np.ndarray  # (L,) meters
    link_radii: np.ndarray  # (L,) meters


@dataclass(frozen=True)
class HumanMotionSequence:
    """Uniformly sampled human motion prediction for one obstacle.

    ``parents[i]`` is the joint index that link ``i`` is attached to; the
    indices must form a tree over joints ``0..L`` rooted at the pelvis.
    """

    parents: tuple[int, ...]
    samples: tuple[HumanMotionSample, ...]
    dt: float
    t_end: float

    @property
    def n_links(self) -> int:
        return len(self.parents)

    def validate(self) -> None:
        if not self.samples:
            raise ValueError("motion sequence has no samples")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        link_order(self.parents)  # raises on a cyclic tree
        prev_t = None
        for sample in self.samples:
            validate_sample(sample, self.parents)
            if prev_t is not None and abs(sample.t - prev_t - self.dt) > _TIME_TOL:
                raise ValueError(
                    f"sample times not uniformly spaced by dt={self.dt}: "
                    f"{prev_t} -> {sample.t}"
                )
            prev_t = sample.t
        if abs(self.samples[-1].t - self.t_end) > _TIME_TOL:
            raise ValueError(
                f"t_end={self.t_end} does not match final sample t={self.samples[-1].t}"
            )


def validate_sample(sample: HumanMotionSample, parents: tuple[int, ...]) -> None:
    n = len(parents)
    if sample.link_quats.shape != (n, 4):
        raise ValueError(f"expected {n} link quaternions, got {sample.link_quats.shape}")
    norms = np.linalg.norm(sample.link_quats, axis=1)
    if np.any(np.abs(norms - 1.0) > QUAT_NORM_TOL):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"non-unit link quaternion (|norm - 1| = {worst:.3e})")
    if np.any(sample.link_lengths <= 0):
        raise ValueError("link lengths must be positive")
    if np.any(sample.link_radii <= 0):
        raise ValueError("link radii must be positive")


def link_order(parents: tuple[int, ...]) -> list[int]:
    """Order in which links can be evaluated, children after parents.

    Raises ValueError when an index is out of range or the parent relation
    is cyclic (i.e. some link's chain never reaches the pelvis).
    """
    n = len(parents)
    for i, p in enumerate(parents):
        if not 0 <= p <= n:
            raise ValueError(f"link {i} has parent joint {p} out of range 0..{n}")
    resolved = {0}  # pelvis
    order: list[int] = []
    pending = list(range(n))
    while pending:
        remaining = []
        for i in pending:
            if parents[i] in resolved:
                resolved.add(i + 1)
                order.append(i)
            else:
                remaining.append(i)
        if len(remaining) == len(pending):
            raise ValueError(f"cyclic skeleton tree: links {remaining} never reach the pelvis")
        pending = remaining
    return order


def quat_rotate_z(quats: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Apply unit quaternions (L, 4) to ``length * z_hat``, giving (L, 3)."""
    w, x, y, z = quats[:, 0], quats[:, 1], quats[:, 2], quats[:, 3]
    # Columns of R(q) applied to z_hat for unit quaternions.
    dx = 2.0 * (x * z + w * y)
    dy = 2.0 * (y * z - w * x)
    dz = 1.0 - 2.0 * (x * x + y * y)
    return np.stack([dx, dy, dz], axis=1) * lengths[:, None]


def human_forward_kinematics(
    sample: HumanMotionSample, parents: tuple[int, ...]
) -> np.ndarray:
    """Joint positions (L + 1, 3) for one sample; joint 0 is the pelvis."""
    validate_sample(sample, parents)
    order = link_order(parents)
    offsets = quat_rotate_z(sample.link_quats, sample.link_lengths)
    joints = np.empty((len(parents) + 1, 3))
    joints[0] = sample.pelvis
    for i in order:
        joints[i + 1] = joints[parents[i]] + offsets[i]
    return joints


def joint_and_centroid_points(joints: np.ndarray, parents: tuple[int, ...]) -> np.ndarray:
    """Human reference points: every joint plus each link's midpoint."""
    mids = 0.5 * (joints[[p for p in parents]] + joints[1:])
    return np.vstack([joints, mids])


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def load_human_motion(path) -> HumanMotionSequence:
    """Read a human motion sequence from its YAML schema (see README)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = yaml.safe_load(f)
    return human_motion_from_dict(doc)


def save_human_motion(seq: HumanMotionSequence, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(human_motion_to_dict(seq), f, sort_keys=False)


def human_motion_from_dict(doc: dict) -> HumanMotionSequence:
    parents = tuple(int(p) for p in doc["skeleton"]["parents"])
    default_lengths = doc.get("lengths")
    default_radii = doc.get("radii")
    samples = []
    for entry in doc["samples"]:
        lengths = entry.get("lengths", default_lengths)
        radii = entry.get("radii", default_radii)
        if lengths is None or radii is None:
            raise ValueError("sample missing link lengths/radii and no defaults given")
        samples.append(
            HumanMotionSample(
                t=float(entry["t"]),
                pelvis=np.asarray(entry["pelvis"], dtype=float),
                link_quats=np.asarray(entry["quats"], dtype=float),
                link_lengths=np.asarray(lengths, dtype=float),
                link_radii=np.asarray(radii, dtype=float),
            )
        )
    seq = HumanMotionSequence(
        parents=parents,
        samples=tuple(samples),
        dt=float(doc["dt"]),
        t_end=float(doc.get("t_end", samples[-1].t if samples else 0.0)),
    )
    seq.validate()
    return seq


def human_motion_to_dict(seq: HumanMotionSequence) -> dict:
    # Lengths/radii are constant in every generator we ship; hoist them when
    # they are shared by all samples to keep files small.
    first = seq.samples[0]
    constant_geometry = all(
        np.array_equal(s.link_lengths, first.link_lengths)
        and np.array_equal(s.link_radii, first.link_radii)
        for s in seq.samples
    )
    doc: dict = {
        "dt": float(seq.dt),
        "t_end": float(seq.t_end),
        "skeleton": {"parents": list(seq.parents)},
    }
    if constant_geometry:
        doc["lengths"] = [float(v) for v in first.link_lengths]
        doc["radii"] = [float(v) for v in first.link_radii]
    entries = []
    for s in seq.samples:
        entry = {
            "t": float(s.t),
            "pelvis": [float(v) for v in s.pelvis],
            "quats": [[float(v) for v in q] for q in s.link_quats],
        }
        if not constant_geometry:
            entry["lengths"] = [float(v) for v in s.link_lengths]
            entry["radii"] = [float(v) for v in s.link_radii]
        entries.append(entry)
    doc["samples"] = entries
    return doc
