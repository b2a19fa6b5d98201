"""Fixed-step gradient descent over free waypoints, with feasibility tracing.

The descent is deliberately plain: one step size, no line search or
momentum.  Free waypoints are clamped to joint limits after every update;
endpoints are never touched.  Each iteration records the objective and a
strict geometric feasibility flag, which is what the convergence-versus-
iteration benchmark curves aggregate later.

``descend_batch`` runs many independent descents in lockstep with vectorized
math; per-path results are identical to running them one at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import objective as obj
from . import robots
from .errors import NumericError
from .robots import RobotModel
from .worlds import SignedDistanceField


@dataclass(frozen=True)
class DescentParams:
    alpha: float = 0.005
    max_iters: int = 100
    converge_tol: float = 1e-5  # on the gradient infinity norm
    # Fixed substep count, or None to choose per path from the initial guess.
    # The choice is made once per descent so the objective stays one fixed
    # function for the whole run.
    n_sub: int | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class DescentTrace:
    """Per-iteration record; entry k describes the path after k updates.

    ``first_feasible`` is confirmed with the strict auto-substep check, so
    it is safe to aggregate into feasibility-versus-iteration curves.  The
    ``feasible`` entries after that iteration use the optimization-time
    substep sampling (re-verifying every later entry would double the cost
    for nothing the curves use).
    """

    objectives: np.ndarray
    lengths: np.ndarray
    feasible: np.ndarray
    first_feasible: int | None
    iterations: int
    converged: bool


def _grouped_evaluate(paths, robot, sdf, params, n_subs, want_grad):
    """Evaluate a batch, grouping paths that share a substep count."""
    B = paths.shape[0]
    keys = ["total", "length", "min_world_clearance", "min_self_clearance"]
    out = {k: np.empty(B) for k in keys}
    if want_grad:
        out["grad"] = np.empty_like(paths)
    for n in np.unique(n_subs):
        idx = np.flatnonzero(n_subs == n)
        res = obj.evaluate_batch(paths[idx], robot, sdf, params, int(n), want_grad)
        for k in keys:
            out[k][idx] = res[k]
        if want_grad:
            out["grad"][idx] = res["grad"]
    return out


def descend_batch(paths0: np.ndarray, robot: RobotModel, sdf: SignedDistanceField,
                  obj_params: obj.ObjectiveParams, params: DescentParams,
                  stop_when_feasible: bool = False):
    """Gradient descent on a batch of paths; returns (paths, [DescentTrace]).

    Iterations where the optimization-time samples already show a collision
    are recorded infeasible outright (a colliding sample is a real colliding
    configuration); clean iterations before the first confirmed feasibility
    are re-verified with the strict auto-substep check.
    """
    X = np.array(paths0, dtype=np.float64)
    if X.ndim != 3:
        raise ValueError(f"expected (B, n_t, n_dof) paths, got {X.shape}")
    if not np.isfinite(X).all():
        raise NumericError("non-finite values in the initial paths")
    B, n_t, dof = X.shape
    lo, hi = robot.limits[:, 0], robot.limits[:, 1]
    max_it = params.max_iters
    if params.n_sub is not None:
        n_subs = np.full(B, params.n_sub, dtype=np.int64)
    else:
        n_subs = obj.choose_n_sub_batch(X, robot, sdf.voxel_size)

    obj_hist = np.full((B, max_it + 1), np.nan)
    len_hist = np.full((B, max_it + 1), np.nan)
    feas_hist = np.zeros((B, max_it + 1), dtype=bool)
    first_feas = np.full(B, -1, dtype=np.int64)
    iters = np.zeros(B, dtype=np.int64)
    converged = np.zeros(B, dtype=bool)
    active = np.arange(B)

    it = 0
    while active.size:
        res = _grouped_evaluate(X[active], robot, sdf, obj_params, n_subs[active], True)
        total, grad = res["total"], res["grad"]
        if not (np.isfinite(total).all() and np.isfinite(grad).all()):
            bad = active[~(np.isfinite(total) & np.isfinite(grad).all(axis=(1, 2)))][0]
            raise NumericError(
                f"non-finite objective or gradient for path {bad} at iteration {it}; "
                f"step size alpha={params.alpha} is likely too large")
        obj_hist[active, it] = total
        len_hist[active, it] = res["length"]
        clean = (res["min_world_clearance"] >= 0.0) & (res["min_self_clearance"] >= 0.0)
        feas_hist[active, it] = clean

        unconfirmed = active[clean & (first_feas[active] < 0)]
        if unconfirmed.size:
            strict = feasibility_check_batch(X[unconfirmed], robot, sdf, None)
            feas_hist[unconfirmed, it] = strict
            first_feas[unconfirmed[strict]] = it
        iters[active] = it

        ginf = np.abs(grad[:, 1:-1]).max(axis=(1, 2)) if n_t > 2 else np.zeros(active.size)
        done = ginf < params.converge_tol
        converged[active[done]] = True
        moving = ~done
        if stop_when_feasible:
            moving &= first_feas[active] < 0
        if it == max_it:
            break
        sel = active[moving]
        if sel.size == 0:
            break
        X[sel, 1:-1] = np.clip(X[sel, 1:-1] - params.alpha * grad[moving][:, 1:-1], lo, hi)
        active = sel
        it += 1

    traces = []
    for p in range(B):
        k = int(iters[p])
        traces.append(DescentTrace(
            objectives=obj_hist[p, :k + 1].copy(),
            lengths=len_hist[p, :k + 1].copy(),
            feasible=feas_hist[p, :k + 1].copy(),
            first_feasible=int(first_feas[p]) if first_feas[p] >= 0 else None,
            iterations=k,
            converged=bool(converged[p]),
        ))
    return X, traces


def descend(path0: np.ndarray, robot: RobotModel, sdf: SignedDistanceField,
            obj_params: obj.ObjectiveParams, params: DescentParams):
    """Single-path descent; endpoints of the result are bit-identical to input."""
    paths, traces = descend_batch(np.asarray(path0, dtype=np.float64)[None],
                                  robot, sdf, obj_params, params)
    return paths[0], traces[0]


def feasibility_check(path: np.ndarray, robot: RobotModel, sdf: SignedDistanceField,
                      n_sub: int | None = None) -> bool:
    """Strict swept feasibility: every substep sample clears world and self."""
    return bool(feasibility_check_batch(
        np.asarray(path, dtype=np.float64)[None], robot, sdf, n_sub)[0])


def feasibility_check_batch(paths: np.ndarray, robot: RobotModel,
                            sdf: SignedDistanceField, n_sub: int | None = None):
    paths = np.asarray(paths, dtype=np.float64)
    B = paths.shape[0]
    if n_sub is not None:
        n_subs = np.full(B, n_sub, dtype=np.int64)
    else:
        n_subs = obj.choose_n_sub_batch(paths, robot, sdf.voxel_size)
    ok = np.zeros(B, dtype=bool)
    ks, ls, rsum = robot.sphere_pair_indices
    for n in np.unique(n_subs):
        idx = np.flatnonzero(n_subs == n)
        configs = obj.substep_configs_batch(paths[idx], int(n))
        nb, S, dof = configs.shape
        centers, _ = robots.sphere_centers_batch(robot, configs.reshape(-1, dof))
        clear = sdf.lookup(centers.reshape(-1, robot.dim)).reshape(nb, S, robot.n_spheres)
        clear = clear - robot.sphere_radius
        good = clear.min(axis=(1, 2)) >= 0.0
        if len(ks):
            cb = centers.reshape(nb, S, robot.n_spheres, robot.dim)
            gap = np.linalg.norm(cb[:, :, ks] - cb[:, :, ls], axis=-1) - rsum
            good &= gap.min(axis=(1, 2)) >= 0.0
        ok[idx] = good
    return ok
