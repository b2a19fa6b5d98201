import numpy as np
import pytest

import bpsplan as bp
from bpsplan import optimizer as opt
from bpsplan import robots
from bpsplan.multistart import MotionTask, straight_line_guess
from bpsplan.objective import ObjectiveParams, length_cost


@pytest.fixture(scope="module")
def sphere2():
    return bp.load_robot("sphere2")


@pytest.fixture(scope="module")
def free_sdf():
    return bp.compute_sdf(bp.OccupancyGrid(
        (64, 64), 1 / 64, np.zeros(2), np.zeros((64, 64), dtype=bool)))


@pytest.fixture(scope="module")
def noise_sdf():
    return bp.compute_sdf(bp.generate_world(bp.WorldSpec(7, 4.0, 0.4, (64, 64), 1 / 64)))


def make_sdf(cells, voxel=1.0):
    cells = np.asarray(cells, dtype=bool)
    return bp.compute_sdf(bp.OccupancyGrid(cells.shape, voxel, np.zeros(cells.ndim), cells))


class TestDescend:
    def test_local_minimum_returns_input(self, sphere2, free_sdf):
        path = np.linspace([0.1, 0.1], [0.9, 0.9], 20)
        final, trace = bp.descend(path, sphere2, free_sdf, ObjectiveParams(),
                                  opt.DescentParams(alpha=0.01, max_iters=50))
        assert trace.iterations == 0
        assert trace.converged
        assert np.array_equal(final, path)

    def test_pure_length_converges_to_straight_line(self, sphere2, free_sdf):
        params = ObjectiveParams(lam=1.0)
        dp = opt.DescentParams(alpha=0.015, max_iters=3000, converge_tol=1e-7)
        bent = straight_line_guess(MotionTask(0, np.array([0.1, 0.1]),
                                              np.array([0.9, 0.9])), 20)
        bent[5:15] += 0.15
        final, trace = bp.descend(bent, sphere2, free_sdf, params, dp)
        assert abs(length_cost(final) - 1.0) < 1e-3

    def test_endpoints_bit_identical(self, sphere2, noise_sdf):
        path = straight_line_guess(MotionTask(0, np.array([0.11, 0.17]),
                                              np.array([0.83, 0.79])), 20)
        final, _ = bp.descend(path, sphere2, noise_sdf, ObjectiveParams(),
                              opt.DescentParams(alpha=0.01, max_iters=60))
        assert np.array_equal(final[0], path[0])
        assert np.array_equal(final[-1], path[-1])

    def test_trace_regression_fixed_seed(self, sphere2, noise_sdf):
        # Frozen first-feasible iteration for a fixed hard-ish task.
        path = straight_line_guess(MotionTask(0, np.array([0.15, 0.2]),
                                              np.array([0.85, 0.8])), 20)
        _, trace = bp.descend(path, sphere2, noise_sdf, ObjectiveParams(),
                              opt.DescentParams(alpha=0.01, max_iters=120))
        assert len(trace.objectives) == trace.iterations + 1
        _, again = bp.descend(path, sphere2, noise_sdf, ObjectiveParams(),
                              opt.DescentParams(alpha=0.01, max_iters=120))
        assert np.array_equal(trace.objectives, again.objectives)
        assert trace.first_feasible == again.first_feasible

    def test_non_finite_aborts_with_diagnostic(self, sphere2, noise_sdf):
        # Joint-limit clamping keeps ordinary runs bounded, so a non-finite
        # state can only enter through the inputs; it must abort, not spin.
        path = straight_line_guess(MotionTask(0, np.array([0.15, 0.2]),
                                              np.array([0.85, 0.8])), 20)
        path[7, 0] = np.nan
        with pytest.raises(bp.NumericError, match="non-finite"):
            bp.descend(path, sphere2, noise_sdf, ObjectiveParams(),
                       opt.DescentParams(alpha=0.005, max_iters=50))

    def test_joint_limits_respected(self, sphere2, noise_sdf):
        path = straight_line_guess(MotionTask(0, np.array([0.07, 0.07]),
                                              np.array([0.93, 0.93])), 20)
        final, _ = bp.descend(path, sphere2, noise_sdf, ObjectiveParams(),
                              opt.DescentParams(alpha=0.02, max_iters=100))
        lo, hi = sphere2.limits[:, 0], sphere2.limits[:, 1]
        assert np.all(final[1:-1] >= lo) and np.all(final[1:-1] <= hi)

    def test_windowed_descent_mostly_monotone(self, sphere2, noise_sdf):
        # Vanilla descent oscillates step to step while a path presses
        # against obstacle surfaces; over 10-iteration windows the objective
        # must not climb by more than 5% of its value, on >= 95% of random
        # instances at the default step size.
        rng = np.random.default_rng(21)
        params = ObjectiveParams()
        dp = opt.DescentParams(max_iters=120)
        ok = 0
        trials = 40
        for _ in range(trials):
            a, b = rng.uniform(0.1, 0.9, size=(2, 2))
            if np.linalg.norm(a - b) < 0.2:
                ok += 1
                continue
            path = straight_line_guess(MotionTask(0, a, b), 20)
            _, tr = bp.descend(path, sphere2, noise_sdf, params, dp)
            vals = tr.objectives
            rises = [(vals[i + 10] - vals[i]) / abs(vals[i])
                     for i in range(len(vals) - 10)]
            ok += not rises or max(rises) <= 0.05
        assert ok >= 0.95 * trials

    def test_batch_matches_single(self, sphere2, noise_sdf):
        tasks = [MotionTask(0, np.array([0.12, 0.2]), np.array([0.88, 0.8])),
                 MotionTask(0, np.array([0.2, 0.85]), np.array([0.8, 0.15])),
                 MotionTask(0, np.array([0.1, 0.5]), np.array([0.9, 0.5]))]
        guesses = np.stack([straight_line_guess(t, 20) for t in tasks])
        params = ObjectiveParams()
        dp = opt.DescentParams(alpha=0.01, max_iters=50)
        batch_final, batch_traces = opt.descend_batch(guesses, sphere2, noise_sdf,
                                                      params, dp)
        for i in range(3):
            single_final, single_trace = bp.descend(guesses[i], sphere2, noise_sdf,
                                                    params, dp)
            assert np.array_equal(batch_final[i], single_final)
            assert np.array_equal(batch_traces[i].objectives, single_trace.objectives)
            assert batch_traces[i].first_feasible == single_trace.first_feasible


class TestFeasibilityCheck:
    def test_free_world_true(self, sphere2, free_sdf):
        path = np.linspace([0.1, 0.1], [0.9, 0.9], 20)
        assert bp.feasibility_check(path, sphere2, free_sdf)

    def test_sample_inside_obstacle_false(self, sphere2):
        cells = np.zeros((64, 64), dtype=bool)
        cells[28:36, 28:36] = True
        sdf = make_sdf(cells, voxel=1 / 64)
        path = np.linspace([0.1, 0.5], [0.9, 0.5], 20)
        assert not bp.feasibility_check(path, sphere2, sdf)

    def test_corner_cutting_true_at_one_false_at_ten(self):
        cells = np.zeros((16, 16), dtype=bool)
        cells[8, :] = True
        sdf = make_sdf(cells)
        bot = robots.robot_from_dict({
            "name": "probe", "dim": 2, "reach": 12.0, "reach_center": [8.0, 8.0],
            "joints": [
                {"kind": "prismatic", "parent": -1, "origin": [0, 0], "axis": [1, 0],
                 "limits": [0.0, 16.0]},
                {"kind": "prismatic", "parent": 0, "origin": [0, 0], "axis": [0, 1],
                 "limits": [0.0, 16.0]},
            ],
            "spheres": [{"frame": 1, "center": [0, 0], "radius": 0.3}],
            "self_pairs": [],
        })
        path = np.array([[7.5, 8.0], [10.5, 8.0], [13.5, 8.0]])
        assert opt.feasibility_check(path, bot, sdf, n_sub=1)
        assert not opt.feasibility_check(path, bot, sdf, n_sub=10)
        # The auto-chosen substep count catches it too.
        assert not opt.feasibility_check(path, bot, sdf)
