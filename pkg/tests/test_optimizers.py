import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evqe.errors import OptimizerError
from evqe.optimizers import Objective, SpsaGains, minimize, nelder_mead, spsa


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


class TestObjective:
    def test_counts_and_best(self):
        obj = Objective(lambda x: float(x[0] ** 2), 1)
        for v in (3.0, -1.0, 2.0):
            obj([v])
        assert obj.evaluations == 3 and obj.best_value == 1.0 and obj.best_params[0] == -1.0

    @pytest.mark.parametrize("bad", [math.nan, math.inf])
    def test_non_finite_aborts(self, bad):
        with pytest.raises(OptimizerError):
            nelder_mead(lambda x: bad, [0.0])


class TestNelderMead:
    def test_parabola(self):
        res = nelder_mead(lambda x: (x[0] - 3) ** 2, [0.0], max_iter=500)
        assert abs(res.best_params[0] - 3) < 1e-6 and res.converged

    def test_rosenbrock(self):
        res = nelder_mead(rosenbrock, [-1.2, 1.0], max_iter=400)
        assert res.best_value < 1e-6 and res.iterations <= 400

    def test_already_optimal(self):
        res = nelder_mead(lambda x: x[0] ** 2, [0.0])
        assert res.best_value == 0 and res.converged

    def test_budget(self):
        res = nelder_mead(rosenbrock, [-1.2, 1.0], max_iter=10)
        # n+1 start points, at most n+2 per shrink iteration
        assert res.iterations == 10 and res.evaluations <= 3 + 10 * 4

    def test_deterministic(self):
        a = nelder_mead(rosenbrock, [-1.2, 1.0], max_iter=50)
        b = nelder_mead(rosenbrock, [-1.2, 1.0], max_iter=50)
        assert np.array_equal(a.best_params, b.best_params) and a.evaluations == b.evaluations

    def test_needs_parameters(self):
        with pytest.raises(ValueError):
            nelder_mead(lambda x: 0.0, [])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=4), st.integers(1, 60))
    def test_never_worse(self, x0, iters):
        f = lambda x: float(np.sum(np.sin(3 * x) + x ** 2))
        res = nelder_mead(f, x0, max_iter=iters)
        assert res.best_value <= f(np.array(x0))
        assert f(res.best_params) == res.best_value


class TestSpsa:
    def test_quadratic(self):
        res = spsa(lambda x: x[0] ** 2, [1.0], max_iter=200, rng=np.random.default_rng(0))
        assert abs(res.best_params[0]) < 0.1

    @pytest.mark.parametrize("iters", [1, 7, 50])
    def test_evaluation_count(self, iters):
        res = spsa(lambda x: float(x @ x), [1.0, -2.0], max_iter=iters, rng=np.random.default_rng(1))
        assert res.evaluations == 2 * iters + 1

    def test_noisy_quadratic(self):
        bests = []
        for seed in range(20):
            noise = np.random.default_rng(1000 + seed)
            res = spsa(lambda x: x[0] ** 2 + 0.1 * noise.standard_normal(), [1.0], max_iter=500,
                       rng=np.random.default_rng(seed))
            bests.append(res.best_params[0])
        assert abs(np.mean(bests)) < 0.15

    def test_deterministic_given_seed(self):
        run = lambda: spsa(rosenbrock, [0.0, 0.0], max_iter=30, rng=np.random.default_rng(5))
        assert np.array_equal(run().best_params, run().best_params)

    def test_known_start_value_is_kept(self):
        f = lambda x: float((x[0] - 0.3) ** 2)
        res = spsa(f, [0.3], max_iter=5, rng=np.random.default_rng(0), f0=0.0)
        assert res.best_value == 0.0 and res.best_params[0] == 0.3

    def test_custom_gains(self):
        res = spsa(lambda x: x[0] ** 2, [1.0], max_iter=100, gains=SpsaGains(a=0.5, c=0.05),
                   rng=np.random.default_rng(0))
        assert abs(res.best_params[0]) < 0.1


def test_minimize_dispatch():
    assert minimize(lambda x: x[0] ** 2, [1.0], method="nelder_mead").best_value < 1e-8
    assert minimize(lambda x: x[0] ** 2, [1.0], method="spsa", rng=np.random.default_rng(0)).evaluations == 201
    with pytest.raises(ValueError):
        minimize(lambda x: 0.0, [1.0], method="bfgs")
