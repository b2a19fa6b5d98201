"""Robot models: serial-chain kinematics, sphere geometry, feasibility.

A robot is a chain (more generally a tree) of revolute/prismatic joints;
one frame per joint.  Link geometry is a set of spheres attached to frames.
Models load from a YAML file; two 2D models ship with the package: a point
robot ("sphere2", two prismatic joints, identity kinematics) and a planar
four-link arm ("arm4").

All kinematics functions are pure and batch over configurations: shapes are
(B, n_dof) in, (B, ...) out.  Thin single-configuration wrappers mirror
them for convenience.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import DataError
from .worlds import SignedDistanceField

SYMMETRY_KINDS = ("none", "grid_rotation", "base_revolute")


@dataclass(frozen=True)
class Joint:
    kind: str  # "revolute" | "prismatic"
    parent: int  # frame index of the parent, -1 for the world frame
    origin: np.ndarray  # fixed translation in the parent frame, shape (d,)
    axis: np.ndarray | None  # unit direction: prismatic always, revolute in 3D
    limits: tuple[float, float]


@dataclass(frozen=True)
class FrameSet:
    """World poses of all link frames for one configuration."""

    rotations: np.ndarray  # (n_frames, d, d)
    translations: np.ndarray  # (n_frames, d)


class RobotModel:
    """Immutable robot description plus precomputed kinematic bookkeeping."""

    def __init__(self, name, dim, joints, sphere_frame, sphere_local, sphere_radius,
                 self_pairs, reach, reach_center, spatial_symmetry="none"):
        self.name = str(name)
        self.dim = int(dim)
        self.joints = tuple(joints)
        self.n_dof = len(self.joints)
        self.n_frames = len(self.joints)
        self.sphere_frame = np.asarray(sphere_frame, dtype=np.int64)
        self.sphere_local = np.asarray(sphere_local, dtype=np.float64).reshape(-1, self.dim)
        self.sphere_radius = np.asarray(sphere_radius, dtype=np.float64)
        self.self_pairs = tuple((int(i), int(j)) for i, j in self_pairs)
        self.reach = float(reach)
        self.reach_center = np.asarray(reach_center, dtype=np.float64)
        self.spatial_symmetry = spatial_symmetry
        self._validate()

        self.limits = np.array([j.limits for j in self.joints], dtype=np.float64)
        # ancestors[i] = ordered joint indices whose motion moves frame i.
        self.ancestors = []
        for i in range(self.n_frames):
            chain = []
            k = i
            while k >= 0:
                chain.append(k)
                k = self.joints[k].parent
            self.ancestors.append(tuple(reversed(chain)))
        self.ancestor_mask = np.zeros((self.n_frames, self.n_dof), dtype=bool)
        for i, chain in enumerate(self.ancestors):
            self.ancestor_mask[i, list(chain)] = True

        self._sphere_pairs = self._build_sphere_pairs()
        self._rho = self._build_displacement_bounds()

    def _validate(self):
        if self.dim not in (2, 3):
            raise DataError(f"robot dim must be 2 or 3, got {self.dim}")
        if np.any(self.sphere_radius <= 0):
            raise DataError("sphere radii must be positive")
        for j, joint in enumerate(self.joints):
            if joint.kind not in ("revolute", "prismatic"):
                raise DataError(f"joint {j}: unknown kind {joint.kind!r}")
            if joint.parent >= j:
                raise DataError(f"joint {j}: parent must precede it")
            lo, hi = joint.limits
            if not lo < hi:
                raise DataError(f"joint {j}: limits must satisfy lo < hi")
            if joint.kind == "prismatic" and joint.axis is None:
                raise DataError(f"joint {j}: prismatic joint needs an axis")
            if self.dim == 3 and joint.kind == "revolute" and joint.axis is None:
                raise DataError(f"joint {j}: 3D revolute joint needs an axis")
        for i, k in self.self_pairs:
            if not (0 <= i < k < self.n_frames):
                raise DataError(f"self pair ({i}, {k}) out of range or unordered")
        if self.spatial_symmetry not in SYMMETRY_KINDS:
            raise DataError(f"unknown spatial symmetry {self.spatial_symmetry!r}")
        if self.reach <= 0:
            raise DataError("reach must be positive")

    def _build_sphere_pairs(self):
        """Sphere index pairs implied by the frame-level self-collision list."""
        by_frame = {i: np.flatnonzero(self.sphere_frame == i) for i in range(self.n_frames)}
        ks, ls = [], []
        for i, j in self.self_pairs:
            for a in by_frame[i]:
                for b in by_frame[j]:
                    ks.append(a)
                    ls.append(b)
        ks = np.asarray(ks, dtype=np.int64)
        ls = np.asarray(ls, dtype=np.int64)
        rsum = (self.sphere_radius[ks] + self.sphere_radius[ls]) if len(ks) else np.zeros(0)
        return ks, ls, rsum

    def _build_displacement_bounds(self):
        """rho[s, j]: bound on sphere-center displacement per unit of joint j.

        Prismatic joints move everything downstream by exactly the step; a
        revolute joint can move a sphere by at most its lever arm, bounded by
        the summed fixed offsets between the joint and the sphere.
        """
        rho = np.zeros((len(self.sphere_frame), self.n_dof))
        for s, frame in enumerate(self.sphere_frame):
            chain = self.ancestors[frame]
            for idx, j in enumerate(chain):
                joint = self.joints[j]
                if joint.kind == "prismatic":
                    rho[s, j] = 1.0
                else:
                    lever = float(np.linalg.norm(self.sphere_local[s]))
                    for k in chain[idx + 1:]:
                        lever += float(np.linalg.norm(self.joints[k].origin))
                    rho[s, j] = lever
        return rho

    @property
    def n_spheres(self) -> int:
        return len(self.sphere_frame)

    @property
    def sphere_pair_indices(self):
        return self._sphere_pairs

    @property
    def displacement_bounds(self) -> np.ndarray:
        return self._rho


# --- kinematics ---------------------------------------------------------------


def _rot2(theta):
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def _rot3_axis(axis, theta):
    """Rodrigues rotation about a fixed unit axis, batched over theta."""
    k = np.asarray(axis, dtype=np.float64)
    kk = np.outer(k, k)
    skew = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    c = np.cos(theta)[..., None, None]
    s = np.sin(theta)[..., None, None]
    eye = np.eye(3)
    return c * eye + s * skew + (1.0 - c) * kk


def forward_kinematics_batch(robot: RobotModel, q: np.ndarray):
    """World poses of every frame for a batch of configurations.

    Returns (rot (B, F, d, d), tr (B, F, d), axis_world (B, F, d)).
    axis_world carries the joint's world-frame motion axis (prismatic
    direction, or revolute axis in 3D; zeros for 2D revolute joints whose
    axis is the implicit out-of-plane direction).
    """
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != robot.n_dof:
        raise ValueError(f"expected (B, {robot.n_dof}) configurations, got {q.shape}")
    B, d = q.shape[0], robot.dim
    rot = np.empty((B, robot.n_frames, d, d))
    tr = np.empty((B, robot.n_frames, d))
    axis_world = np.zeros((B, robot.n_frames, d))
    for i, joint in enumerate(robot.joints):
        if joint.parent < 0:
            pr = None
            base_t = np.broadcast_to(joint.origin, (B, d))
        else:
            pr = rot[:, joint.parent]
            base_t = tr[:, joint.parent] + pr @ joint.origin
        if joint.kind == "revolute":
            jr = _rot2(q[:, i]) if d == 2 else _rot3_axis(joint.axis, q[:, i])
            rot[:, i] = jr if pr is None else pr @ jr
            tr[:, i] = base_t
            if d == 3:
                axis_world[:, i] = joint.axis if pr is None else pr @ joint.axis
        else:  # prismatic
            rot[:, i] = np.eye(d) if pr is None else pr
            direction = np.broadcast_to(joint.axis, (B, d)) if pr is None \
                else pr @ joint.axis
            tr[:, i] = base_t + direction * q[:, i, None]
            axis_world[:, i] = direction
    return rot, tr, axis_world


def forward_kinematics(robot: RobotModel, q: np.ndarray) -> FrameSet:
    rot, tr, _ = forward_kinematics_batch(robot, np.asarray(q, dtype=np.float64)[None])
    return FrameSet(rot[0], tr[0])


def sphere_centers_batch(robot: RobotModel, q: np.ndarray):
    """World sphere centers (B, n_spheres, d) for a batch of configurations."""
    rot, tr, axis_world = forward_kinematics_batch(robot, q)
    centers = _centers_from_frames(robot, rot, tr)
    return centers, (rot, tr, axis_world)


def _centers_from_frames(robot, rot, tr):
    fr = robot.sphere_frame
    spun = (rot[:, fr] @ robot.sphere_local[:, :, None])[..., 0]
    return spun + tr[:, fr]


def sphere_centers(robot: RobotModel, q: np.ndarray):
    """List of (center, radius, frame, sphere index) entries at configuration q."""
    centers, _ = sphere_centers_batch(robot, np.asarray(q, dtype=np.float64)[None])
    return [
        (centers[0, s], float(robot.sphere_radius[s]), int(robot.sphere_frame[s]), s)
        for s in range(robot.n_spheres)
    ]


def _perp2(v):
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def sphere_jacobians_batch(robot: RobotModel, q: np.ndarray, fk=None):
    """Exact position Jacobians d(center)/dq, shape (B, n_spheres, d, n_dof)."""
    q = np.asarray(q, dtype=np.float64)
    if fk is None:
        centers, fk = sphere_centers_batch(robot, q)
    else:
        rot, tr, _ = fk
        centers = _centers_from_frames(robot, rot, tr)
    rot, tr, axis_world = fk
    B = q.shape[0]
    jac = np.zeros((B, robot.n_spheres, robot.dim, robot.n_dof))
    on_chain = robot.ancestor_mask[robot.sphere_frame]  # (n_spheres, n_dof)
    for j, joint in enumerate(robot.joints):
        mask = on_chain[:, j]
        if not mask.any():
            continue
        if joint.kind == "prismatic":
            col = np.broadcast_to(axis_world[:, None, j], (B, robot.n_spheres, robot.dim))
        elif robot.dim == 2:
            col = _perp2(centers - tr[:, None, j])
        else:
            col = np.cross(np.broadcast_to(axis_world[:, None, j], centers.shape),
                           centers - tr[:, None, j])
        jac[..., j] = col * mask[None, :, None]
    return jac, centers


def sphere_jacobian(robot: RobotModel, q: np.ndarray, frame: int, sphere: int) -> np.ndarray:
    """Jacobian of one sphere's world center, shape (d, n_dof)."""
    if not (0 <= sphere < robot.n_spheres) or robot.sphere_frame[sphere] != frame:
        raise ValueError(f"no sphere {sphere} on frame {frame}")
    jac, _ = sphere_jacobians_batch(robot, np.asarray(q, dtype=np.float64)[None])
    return jac[0, sphere]


# --- sampling and feasibility ---------------------------------------------------


def random_config_batch(robot: RobotModel, rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(robot.limits[:, 0], robot.limits[:, 1], size=(n, robot.n_dof))


def random_config(robot: RobotModel, rng: np.random.Generator) -> np.ndarray:
    return random_config_batch(robot, rng, 1)[0]


def clearances_batch(robot: RobotModel, sdf: SignedDistanceField, q: np.ndarray):
    """Per-configuration world and self clearance minima (B,), (B,)."""
    centers, _ = sphere_centers_batch(robot, q)
    B = centers.shape[0]
    dist = sdf.lookup(centers.reshape(-1, robot.dim)).reshape(B, robot.n_spheres)
    world_clear = (dist - robot.sphere_radius).min(axis=1)
    ks, ls, rsum = robot.sphere_pair_indices
    if len(ks):
        gap = np.linalg.norm(centers[:, ks] - centers[:, ls], axis=-1) - rsum
        self_clear = gap.min(axis=1)
    else:
        self_clear = np.full(B, np.inf)
    return world_clear, self_clear


def is_config_feasible_batch(robot: RobotModel, sdf: SignedDistanceField, q: np.ndarray):
    world_clear, self_clear = clearances_batch(robot, sdf, q)
    return (world_clear >= 0.0) & (self_clear >= 0.0)


def is_config_feasible(robot: RobotModel, sdf: SignedDistanceField, q: np.ndarray) -> bool:
    return bool(is_config_feasible_batch(robot, sdf, np.asarray(q, dtype=np.float64)[None])[0])


# --- model files ----------------------------------------------------------------

_BUILTIN_MODELS = ("sphere2", "arm4")


def _as_joint(entry, dim, index):
    kind = entry["kind"]
    axis = entry.get("axis")
    if axis is not None:
        axis = np.asarray(axis, dtype=np.float64)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise DataError(f"joint {index}: zero axis")
        axis = axis / norm
    return Joint(
        kind=kind,
        parent=int(entry.get("parent", index - 1)),
        origin=np.asarray(entry.get("origin", [0.0] * dim), dtype=np.float64),
        axis=axis,
        limits=(float(entry["limits"][0]), float(entry["limits"][1])),
    )


def robot_from_dict(data: dict) -> RobotModel:
    try:
        dim = int(data["dim"])
        joints = [_as_joint(e, dim, i) for i, e in enumerate(data["joints"])]
        spheres = data["spheres"]
        return RobotModel(
            name=data["name"],
            dim=dim,
            joints=joints,
            sphere_frame=[s["frame"] for s in spheres],
            sphere_local=[s["center"] for s in spheres],
            sphere_radius=[s["radius"] for s in spheres],
            self_pairs=data.get("self_pairs", []),
            reach=data["reach"],
            reach_center=data["reach_center"],
            spatial_symmetry=data.get("spatial_symmetry", "none"),
        )
    except KeyError as exc:
        raise DataError(f"robot file missing field {exc}") from exc


def robot_to_dict(robot: RobotModel) -> dict:
    return {
        "name": robot.name,
        "dim": robot.dim,
        "reach": robot.reach,
        "reach_center": robot.reach_center.tolist(),
        "spatial_symmetry": robot.spatial_symmetry,
        "joints": [
            {
                "kind": j.kind,
                "parent": j.parent,
                "origin": j.origin.tolist(),
                **({"axis": j.axis.tolist()} if j.axis is not None else {}),
                "limits": [j.limits[0], j.limits[1]],
            }
            for j in robot.joints
        ],
        "spheres": [
            {
                "frame": int(robot.sphere_frame[s]),
                "center": robot.sphere_local[s].tolist(),
                "radius": float(robot.sphere_radius[s]),
            }
            for s in range(robot.n_spheres)
        ],
        "self_pairs": [list(p) for p in robot.self_pairs],
    }


def load_robot(name_or_path: str) -> RobotModel:
    """Load a bundled model by name or any model from a YAML file path."""
    if name_or_path in _BUILTIN_MODELS:
        ref = importlib.resources.files("bpsplan") / "data" / f"{name_or_path}.yaml"
        text = ref.read_text()
    else:
        with open(name_or_path, "r") as fh:
            text = fh.read()
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise DataError(f"{name_or_path}: robot file must be a mapping")
    return robot_from_dict(data)


def save_robot(path, robot: RobotModel):
    with open(path, "w") as fh:
        yaml.safe_dump(robot_to_dict(robot), fh, sort_keys=False)
