"""Path objective: collision + self-collision + normalized length, with gradient.

A path is an (n_t, n_dof) float array; rows 0 and n_t-1 are pinned
endpoints, rows 1..n_t-2 are the optimization variables.  Collision terms
are evaluated on substep configurations interpolated between consecutive
waypoints so the swept volume is sampled explicitly; the substep count can
be chosen automatically from per-robot displacement bounds so consecutive
samples move by at most one voxel.

Everything here is pure; the batched entry point evaluates many paths at
once and is what the optimizer and benchmark loops use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import robots
from .robots import RobotModel
from .worlds import SignedDistanceField

MAX_SUBSTEPS = 64


@dataclass(frozen=True)
class ObjectiveParams:
    lam: float = 0.01  # weight of the length term
    eps: float = 0.03125  # clipping width in meters (2 voxels at 1/64)
    n_sub: int | None = None  # substeps per segment; None = choose automatically
    include_self: bool = True
    self_weight: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.n_sub is not None and self.n_sub < 1:
            raise ValueError("n_sub must be >= 1")


@dataclass
class ObjectiveValue:
    total: float
    collision: float
    self_collision: float
    length: float
    n_sub: int
    min_world_clearance: float
    min_self_clearance: float

    @property
    def feasible(self) -> bool:
        return self.min_world_clearance >= 0.0 and self.min_self_clearance >= 0.0


def clip_cost(d, eps: float):
    """Smooth one-sided penetration penalty; C^1 at d = 0 and d = eps."""
    d = np.asarray(d, dtype=np.float64)
    quad = (d - eps) ** 2 / (2.0 * eps)
    return np.where(d < 0.0, -d + eps / 2.0, np.where(d <= eps, quad, 0.0))


def clip_cost_deriv(d, eps: float):
    d = np.asarray(d, dtype=np.float64)
    return np.where(d < 0.0, -1.0, np.where(d <= eps, (d - eps) / eps, 0.0))


def _check_path(path) -> np.ndarray:
    path = np.asarray(path, dtype=np.float64)
    if path.ndim != 2 or path.shape[0] < 3:
        raise ValueError(f"a path needs >= 3 waypoints, got shape {path.shape}")
    return path


def length_cost(path: np.ndarray) -> float:
    """Sum of squared steps, scaled so a uniform straight path costs exactly 1."""
    return float(length_cost_batch(_check_path(path)[None])[0])


def length_cost_batch(paths: np.ndarray) -> np.ndarray:
    n_t = paths.shape[1]
    span = paths[:, -1] - paths[:, 0]
    denom = np.einsum("bd,bd->b", span, span)
    if np.any(denom == 0.0):
        raise ValueError("length cost undefined for coincident endpoints")
    diffs = np.diff(paths, axis=1)
    steps = np.einsum("btd,btd->b", diffs, diffs)
    return (n_t - 1) * steps / denom


def length_gradient_batch(paths: np.ndarray) -> np.ndarray:
    """Gradient of the length cost w.r.t. every waypoint (endpoints included)."""
    n_t = paths.shape[1]
    span = paths[:, -1] - paths[:, 0]
    denom = np.einsum("bd,bd->b", span, span)
    if np.any(denom == 0.0):
        raise ValueError("length cost undefined for coincident endpoints")
    grad = np.zeros_like(paths)
    grad[:, 1:-1] = 2.0 * paths[:, 1:-1] - paths[:, :-2] - paths[:, 2:]
    # Endpoint rows stay zero: they are pinned, so the normalization term is
    # constant with respect to the free variables.
    return grad * ((n_t - 1) * 2.0 / denom)[:, None, None]


def substep_configs(path: np.ndarray, n_sub: int) -> np.ndarray:
    """All swept-volume sample configurations, ((n_t-1)*n_sub + 1, n_dof)."""
    return substep_configs_batch(_check_path(path)[None], n_sub)[0]


def substep_configs_batch(paths: np.ndarray, n_sub: int) -> np.ndarray:
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    B, n_t, dof = paths.shape
    fr = np.arange(n_sub, dtype=np.float64) / n_sub
    start = paths[:, :-1, None, :]
    diff = (paths[:, 1:] - paths[:, :-1])[:, :, None, :]
    inner = (start + fr[None, None, :, None] * diff).reshape(B, (n_t - 1) * n_sub, dof)
    return np.concatenate([inner, paths[:, -1:, :]], axis=1)


def choose_n_sub(path: np.ndarray, robot: RobotModel, voxel_size: float) -> int:
    """Substeps so every sphere center moves at most one voxel per sample."""
    return int(choose_n_sub_batch(_check_path(path)[None], robot, voxel_size)[0])


def choose_n_sub_batch(paths: np.ndarray, robot: RobotModel, voxel_size: float) -> np.ndarray:
    steps = np.abs(np.diff(paths, axis=1))  # (B, n_t-1, dof)
    bound = np.einsum("btj,sj->bts", steps, robot.displacement_bounds)
    worst = bound.max(axis=(1, 2))
    return np.clip(np.ceil(worst / voxel_size).astype(np.int64), 1, MAX_SUBSTEPS)


def _scatter_to_waypoints(sample_grad: np.ndarray, n_t: int, n_sub: int) -> np.ndarray:
    """Distribute per-sample gradients onto waypoints via the interpolation weights."""
    B, S, dof = sample_grad.shape
    fr = np.arange(n_sub, dtype=np.float64) / n_sub
    main = sample_grad[:, :-1].reshape(B, n_t - 1, n_sub, dof)
    grad = np.zeros((B, n_t, dof))
    grad[:, :-1] += np.tensordot(main, 1.0 - fr, axes=([2], [0]))
    grad[:, 1:] += np.tensordot(main, fr, axes=([2], [0]))
    grad[:, -1] += sample_grad[:, -1]  # final sample sits exactly on q_{n_t}
    return grad


def evaluate_batch(paths: np.ndarray, robot: RobotModel, sdf: SignedDistanceField,
                   params: ObjectiveParams, n_sub: int, want_grad: bool):
    """Objective components, clearances, and optionally the full gradient.

    Returns a dict of per-path arrays; 'grad' covers every waypoint row (the
    caller slices off the pinned endpoints).
    """
    B, n_t, dof = paths.shape
    configs = substep_configs_batch(paths, n_sub)
    S = configs.shape[1]
    flat_q = configs.reshape(B * S, dof)

    if want_grad:
        fk = robots.forward_kinematics_batch(robot, flat_q)
        jac, centers = robots.sphere_jacobians_batch(robot, flat_q, fk=fk)
    else:
        centers, _ = robots.sphere_centers_batch(robot, flat_q)
        jac = None

    n_sph = robot.n_spheres
    pts = centers.reshape(-1, robot.dim)
    if want_grad:
        dist, sdf_grad = sdf.lookup_with_gradient(pts)
        sdf_grad = sdf_grad.reshape(B, S, n_sph, robot.dim)
    else:
        dist = sdf.lookup(pts)
    clear = dist.reshape(B, S, n_sph) - robot.sphere_radius

    collision = clip_cost(clear, params.eps).sum(axis=(1, 2))
    min_world = clear.min(axis=(1, 2))

    ks, ls, rsum = robot.sphere_pair_indices
    use_self = params.include_self and len(ks) > 0
    centers_b = centers.reshape(B, S, n_sph, robot.dim)
    if use_self:
        pdiff = centers_b[:, :, ks] - centers_b[:, :, ls]
        pdist = np.linalg.norm(pdiff, axis=-1)
        self_clear = pdist - rsum
        self_cost = clip_cost(self_clear, params.eps).sum(axis=(1, 2))
        min_self = self_clear.min(axis=(1, 2))
    else:
        self_cost = np.zeros(B)
        min_self = np.full(B, np.inf)

    length = length_cost_batch(paths)
    total = collision + params.self_weight * self_cost + params.lam * length

    out = {
        "total": total,
        "collision": collision,
        "self_collision": self_cost,
        "length": length,
        "min_world_clearance": min_world,
        "min_self_clearance": min_self,
    }
    if not want_grad:
        return out

    jac_b = jac.reshape(B, S, n_sph, robot.dim, dof)
    coeff = clip_cost_deriv(clear, params.eps)
    # sum_{n,d} coeff * sdf_grad * jac as a batched vector-matrix product
    lhs = (coeff[..., None] * sdf_grad).reshape(B, S, 1, n_sph * robot.dim)
    sample_grad = (lhs @ jac_b.reshape(B, S, n_sph * robot.dim, dof))[:, :, 0, :]
    if use_self:
        w = clip_cost_deriv(self_clear, params.eps)
        safe = np.where(pdist > 0.0, pdist, 1.0)
        dirs = pdiff * (np.where(pdist > 0.0, w / safe, 0.0))[..., None]
        jac_pair = jac_b[:, :, ks] - jac_b[:, :, ls]
        P = len(ks)
        lhs_s = dirs.reshape(B, S, 1, P * robot.dim)
        pair_grad = (lhs_s @ jac_pair.reshape(B, S, P * robot.dim, dof))[:, :, 0, :]
        sample_grad = sample_grad + params.self_weight * pair_grad

    grad = _scatter_to_waypoints(sample_grad, n_t, n_sub)
    grad += params.lam * length_gradient_batch(paths)
    out["grad"] = grad
    return out


def _resolve_n_sub(path, robot, sdf, params) -> int:
    if params.n_sub is not None:
        return params.n_sub
    return choose_n_sub(path, robot, sdf.voxel_size)


def collision_cost(path, robot: RobotModel, sdf: SignedDistanceField,
                   params: ObjectiveParams) -> float:
    path = _check_path(path)
    n_sub = _resolve_n_sub(path, robot, sdf, params)
    configs = substep_configs_batch(path[None], n_sub)[0]
    centers, _ = robots.sphere_centers_batch(robot, configs)
    clear = sdf.lookup(centers.reshape(-1, robot.dim)) - np.tile(
        robot.sphere_radius, configs.shape[0])
    return float(clip_cost(clear, params.eps).sum())


def self_collision_cost(path, robot: RobotModel, params: ObjectiveParams,
                        voxel_size: float | None = None) -> float:
    path = _check_path(path)
    ks, ls, rsum = robot.sphere_pair_indices
    if len(ks) == 0:
        return 0.0
    if params.n_sub is not None:
        n_sub = params.n_sub
    elif voxel_size is not None:
        n_sub = choose_n_sub(path, robot, voxel_size)
    else:
        n_sub = 1
    configs = substep_configs_batch(path[None], n_sub)[0]
    centers, _ = robots.sphere_centers_batch(robot, configs)
    gap = np.linalg.norm(centers[:, ks] - centers[:, ls], axis=-1) - rsum
    return float(clip_cost(gap, params.eps).sum())


def objective(path, robot: RobotModel, sdf: SignedDistanceField,
              params: ObjectiveParams) -> ObjectiveValue:
    path = _check_path(path)
    n_sub = _resolve_n_sub(path, robot, sdf, params)
    res = evaluate_batch(path[None], robot, sdf, params, n_sub, want_grad=False)
    return ObjectiveValue(
        total=float(res["total"][0]),
        collision=float(res["collision"][0]),
        self_collision=float(res["self_collision"][0]),
        length=float(res["length"][0]),
        n_sub=n_sub,
        min_world_clearance=float(res["min_world_clearance"][0]),
        min_self_clearance=float(res["min_self_clearance"][0]),
    )


def objective_gradient(path, robot: RobotModel, sdf: SignedDistanceField,
                       params: ObjectiveParams) -> np.ndarray:
    """Gradient with respect to the free waypoints, shape (n_t - 2, n_dof)."""
    path = _check_path(path)
    n_sub = _resolve_n_sub(path, robot, sdf, params)
    res = evaluate_batch(path[None], robot, sdf, params, n_sub, want_grad=True)
    return res["grad"][0, 1:-1]
