"""Random-restart baseline: via-point initial guesses and best-of-N solving.

Each start gets its own rng substream derived from (master seed, task
digest, start index), so a run is reproducible regardless of execution
order or batching.  Start 0 is always the straight-line guess; the rest
route through 1-3 uniform via points and are resampled to a fixed waypoint
count by arc position.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import optimizer as opt
from .objective import ObjectiveParams, length_cost_batch
from .robots import RobotModel, random_config_batch
from .worlds import SignedDistanceField

_EARLY_STOP_CHUNK = 16


@dataclass(frozen=True, eq=False)
class MotionTask:
    world: int
    q_start: np.ndarray
    q_goal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q_start", np.asarray(self.q_start, dtype=np.float64))
        object.__setattr__(self, "q_goal", np.asarray(self.q_goal, dtype=np.float64))
        if self.q_start.shape != self.q_goal.shape:
            raise ValueError("start and goal dimensions differ")
        if np.array_equal(self.q_start, self.q_goal):
            raise ValueError("start and goal must differ")


def task_digest(task: MotionTask) -> int:
    """Stable 64-bit digest of a task, used to derive rng substreams."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(task.world).to_bytes(8, "little", signed=True))
    h.update(task.q_start.astype("<f8").tobytes())
    h.update(task.q_goal.astype("<f8").tobytes())
    return int.from_bytes(h.digest(), "little")


def start_rng(seed: int, task: MotionTask, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, task_digest(task), index]))


def straight_line_guess(task: MotionTask, n_t: int) -> np.ndarray:
    if n_t < 3:
        raise ValueError("paths need at least 3 waypoints")
    return np.linspace(task.q_start, task.q_goal, n_t)


def random_guess(task: MotionTask, robot: RobotModel, n_t: int,
                 rng: np.random.Generator, n_via: int | None = None) -> np.ndarray:
    """Piecewise-linear path through uniform via points, resampled to n_t rows."""
    if n_via is None:
        n_via = int(rng.integers(1, 4))
    if n_via == 0:
        return straight_line_guess(task, n_t)
    vias = random_config_batch(robot, rng, n_via)
    knots = np.vstack([task.q_start[None], vias, task.q_goal[None]])
    seg = np.linalg.norm(np.diff(knots, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, cum[-1], n_t)
    path = np.column_stack([
        np.interp(targets, cum, knots[:, j]) for j in range(knots.shape[1])
    ])
    path[0] = task.q_start
    path[-1] = task.q_goal
    return path


@dataclass
class MultistartResult:
    best_path: np.ndarray | None
    best_index: int | None
    best_length: float | None
    traces: list
    feasible: np.ndarray  # per-start final feasibility
    final_lengths: np.ndarray
    n_evaluated: int


def solve_multistart(task: MotionTask, robot: RobotModel, sdf: SignedDistanceField,
                     obj_params: ObjectiveParams, descent_params: opt.DescentParams,
                     n_t: int, n_starts: int, seed: int,
                     stop_after_feasible: int | None = None) -> MultistartResult:
    """Best-of-N descent from the straight line plus random via-point guesses.

    With ``stop_after_feasible`` set, starts are processed in fixed-size
    chunks and the scan stops once that many feasible results exist; the
    per-start results themselves are unaffected.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    guesses = [straight_line_guess(task, n_t)]
    for i in range(1, n_starts):
        guesses.append(random_guess(task, robot, n_t, start_rng(seed, task, i)))
    guesses = np.stack(guesses)

    chunk = n_starts if stop_after_feasible is None else _EARLY_STOP_CHUNK
    paths = np.empty_like(guesses)
    traces: list = []
    feasible = np.zeros(n_starts, dtype=bool)
    lengths = np.full(n_starts, np.inf)
    done = 0
    while done < n_starts:
        hi = min(done + chunk, n_starts)
        out, tr = opt.descend_batch(guesses[done:hi], robot, sdf, obj_params, descent_params)
        paths[done:hi] = out
        traces.extend(tr)
        # Final acceptance is always the strict auto-substep check, even when
        # the descent itself ran on a fixed substep budget.
        feasible[done:hi] = opt.feasibility_check_batch(out, robot, sdf, None)
        lengths[done:hi] = length_cost_batch(out)
        done = hi
        if stop_after_feasible is not None and feasible[:done].sum() >= stop_after_feasible:
            break

    evaluated = done
    idx = np.flatnonzero(feasible[:evaluated])
    if idx.size == 0:
        return MultistartResult(None, None, None, traces, feasible[:evaluated],
                                lengths[:evaluated], evaluated)
    best = idx[np.argmin(lengths[idx])]
    return MultistartResult(paths[best].copy(), int(best), float(lengths[best]),
                            traces, feasible[:evaluated], lengths[:evaluated], evaluated)
