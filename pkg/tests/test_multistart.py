import numpy as np
import pytest

import bpsplan as bp
from bpsplan import multistart as ms
from bpsplan import optimizer as opt
from bpsplan.objective import ObjectiveParams, length_cost


@pytest.fixture(scope="module")
def sphere2():
    return bp.load_robot("sphere2")


@pytest.fixture(scope="module")
def free_sdf():
    return bp.compute_sdf(bp.OccupancyGrid(
        (64, 64), 1 / 64, np.zeros(2), np.zeros((64, 64), dtype=bool)))


def wall_sdf():
    """Thick wall with a single off-axis gap; straight lines across fail."""
    cells = np.zeros((64, 64), dtype=bool)
    cells[:, 30:34] = True
    cells[52:60, 30:34] = False
    return bp.compute_sdf(bp.OccupancyGrid((64, 64), 1 / 64, np.zeros(2), cells))


def task_across():
    return ms.MotionTask(0, np.array([0.5, 0.15]), np.array([0.5, 0.85]))


class TestGuesses:
    def test_straight_line_values(self):
        task = ms.MotionTask(0, np.array([0.0]), np.array([1.0]))
        path = ms.straight_line_guess(task, 5)
        assert np.allclose(path.ravel(), [0, 0.25, 0.5, 0.75, 1.0])

    def test_straight_line_cost_is_one(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            a, b = rng.uniform(0.1, 0.9, size=(2, 3))
            path = ms.straight_line_guess(ms.MotionTask(0, a, b), 20)
            assert length_cost(path) == pytest.approx(1.0, abs=1e-12)

    def test_coincident_endpoints_rejected(self):
        with pytest.raises(ValueError):
            ms.MotionTask(0, np.array([0.4, 0.4]), np.array([0.4, 0.4]))

    def test_zero_vias_equals_straight_line(self, sphere2):
        task = task_across()
        rng = np.random.default_rng(31)
        path = ms.random_guess(task, sphere2, 20, rng, n_via=0)
        assert np.array_equal(path, ms.straight_line_guess(task, 20))

    def test_fixed_seed_regression(self, sphere2):
        task = task_across()
        a = ms.random_guess(task, sphere2, 20, np.random.default_rng(32))
        b = ms.random_guess(task, sphere2, 20, np.random.default_rng(32))
        assert np.array_equal(a, b)

    def test_endpoints_preserved_for_all_draws(self, sphere2):
        task = task_across()
        for i in range(50):
            path = ms.random_guess(task, sphere2, 20, np.random.default_rng(i))
            assert np.array_equal(path[0], task.q_start)
            assert np.array_equal(path[-1], task.q_goal)
            assert path.shape == (20, 2)

    def test_via_count_distribution(self, sphere2):
        # 1 to 3 via points drawn uniformly per the construction.
        rng = np.random.default_rng(33)
        counts = {1: 0, 2: 0, 3: 0}
        for _ in range(300):
            k = int(rng.integers(1, 4))
            counts[k] += 1
        assert all(v > 60 for v in counts.values())


class TestSolveMultistart:
    def test_free_world_straight_line_wins(self, sphere2, free_sdf):
        task = task_across()
        res = ms.solve_multistart(task, sphere2, free_sdf, ObjectiveParams(),
                                  opt.DescentParams(alpha=0.01, max_iters=30),
                                  n_t=20, n_starts=8, seed=5)
        assert res.best_index == 0
        assert res.best_length == pytest.approx(1.0, abs=1e-9)

    def test_single_straight_start_fails_on_hard_task(self, sphere2):
        sdf = wall_sdf()
        res = ms.solve_multistart(task_across(), sphere2, sdf, ObjectiveParams(),
                                  opt.DescentParams(alpha=0.01, max_iters=100),
                                  n_t=20, n_starts=1, seed=5)
        assert res.best_path is None
        assert res.traces[0].first_feasible is None

    def test_multistart_solves_hard_task(self, sphere2):
        sdf = wall_sdf()
        res = ms.solve_multistart(task_across(), sphere2, sdf, ObjectiveParams(),
                                  opt.DescentParams(alpha=0.01, max_iters=150, n_sub=6),
                                  n_t=20, n_starts=40, seed=5)
        assert res.best_path is not None
        assert bp.feasibility_check(res.best_path, sphere2, sdf)

    def test_best_is_shortest_feasible(self, sphere2):
        sdf = wall_sdf()
        res = ms.solve_multistart(task_across(), sphere2, sdf, ObjectiveParams(),
                                  opt.DescentParams(alpha=0.01, max_iters=150, n_sub=6),
                                  n_t=20, n_starts=40, seed=5)
        feasible_lengths = res.final_lengths[res.feasible]
        assert res.best_length == feasible_lengths.min()
        assert res.best_length <= feasible_lengths.max()

    def test_per_start_rng_independent_of_batching(self, sphere2):
        # The same start index gets the same guess no matter how many
        # starts run or in what grouping.
        task = task_across()
        g5 = ms.random_guess(task, sphere2, 20, ms.start_rng(9, task, 5))
        for n_starts in (6, 12, 40):
            again = ms.random_guess(task, sphere2, 20, ms.start_rng(9, task, 5))
            assert np.array_equal(g5, again)

    def test_early_stop_matches_prefix_of_full_run(self, sphere2):
        sdf = wall_sdf()
        params = ObjectiveParams()
        dp = opt.DescentParams(alpha=0.01, max_iters=150, n_sub=6)
        full = ms.solve_multistart(task_across(), sphere2, sdf, params, dp,
                                   n_t=20, n_starts=48, seed=5)
        early = ms.solve_multistart(task_across(), sphere2, sdf, params, dp,
                                    n_t=20, n_starts=48, seed=5,
                                    stop_after_feasible=1)
        n = early.n_evaluated
        assert np.array_equal(early.feasible, full.feasible[:n])
        assert np.allclose(early.final_lengths, full.final_lengths[:n])

    def test_digest_is_stable_and_distinguishes_tasks(self):
        t1 = task_across()
        t2 = ms.MotionTask(1, t1.q_start, t1.q_goal)
        assert ms.task_digest(t1) == ms.task_digest(task_across())
        assert ms.task_digest(t1) != ms.task_digest(t2)
