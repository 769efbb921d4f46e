import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mnpz import Instance, check_optimality, gradient, make_iterate
from mnpz.iterate import InfeasiblePointError, default_opt_tol

from conftest import random_instance


class TestMakeIterate:
    def test_snaps_to_lower_bound(self):
        inst = Instance(np.eye(2), [1.0, 1.0], [1.0, 1.0])
        it = make_iterate(inst, [1e-13, 0.5], snap_tol=1e-12)
        np.testing.assert_array_equal(it.x, [0.0, 0.5])
        assert it.I0.tolist() == [0] and it.J.tolist() == [1]

    def test_at_upper_bound(self):
        inst = Instance(np.eye(3), np.ones(3), [1.0, 2.0, np.inf])
        it = make_iterate(inst, [1.0, 2.0 - 1e-13, 7.0])
        assert it.I1.tolist() == [0, 1] and it.J.tolist() == [2]
        assert it.x[1] == 2.0

    def test_infinite_bound_cannot_be_reached(self):
        inst = Instance(np.eye(1), [1.0])
        with pytest.raises(InfeasiblePointError):
            make_iterate(inst, [np.inf])

    def test_origin(self):
        inst = Instance(np.eye(2), [3.0, 4.0])
        it = make_iterate(inst, np.zeros(2))
        assert it.I0.tolist() == [0, 1] and it.J.size == 0
        assert it.objective == 12.5

    @pytest.mark.parametrize("x", [[-1e-6, 0.5], [0.5, 1.0 + 1e-6]])
    def test_rejects_violation(self, x):
        inst = Instance(np.eye(2), [1.0, 1.0], [1.0, 1.0])
        with pytest.raises(InfeasiblePointError):
            make_iterate(inst, x)

    def test_partition_key(self):
        inst = Instance(np.eye(3), np.ones(3), [1.0, 1.0, 1.0])
        it = make_iterate(inst, [0.0, 1.0, 0.5])
        assert it.partition_key() == ((0,), (1,))
        assert it.sizes == (1, 1, 1)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_bound_membership_is_exact(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, 3, 6, capacitated=True)
        x = rng.uniform(0, 1, 6) * inst.u
        x[rng.random(6) < 0.3] = 0.0
        up = rng.random(6) < 0.3
        x[up] = inst.u[up] * (1 - 1e-14)
        it = make_iterate(inst, x)
        assert np.all(it.x[it.I0] == 0.0)
        assert np.all(it.x[it.I1] == inst.u[it.I1])
        assert np.all((it.x[it.J] > 0) & (it.x[it.J] < inst.u[it.J]))


class TestGradient:
    @pytest.mark.parametrize("A, b, x, g", [
        (np.eye(2), [1.0, 0.0], [0.0, 0.0], [-1.0, 0.0]),
        ([[1.0, 1.0]], [2.0], [0.0, 0.0], [-2.0, -2.0]),
    ])
    def test_values(self, A, b, x, g):
        inst = Instance(A, b)
        np.testing.assert_array_equal(gradient(inst, make_iterate(inst, x)), g)

    def test_zero_at_least_squares_solution(self, rng):
        A = rng.standard_normal((6, 3))
        x = np.abs(rng.standard_normal(3)) + 1
        inst = Instance(A, A @ x + 0.01 * rng.standard_normal(6))
        xs, *_ = np.linalg.lstsq(A, inst.b, rcond=None)
        assert np.all(xs > 0)
        assert np.max(np.abs(gradient(inst, make_iterate(inst, xs)))) < 1e-8

    def test_finite_differences(self, rng):
        inst = random_instance(rng, 4, 5)
        x = rng.uniform(0.5, 1.5, 5)
        g = gradient(inst, make_iterate(inst, x))
        h = 1e-6
        fd = np.array([(inst.objective(x + h * e) - inst.objective(x - h * e))
                       / (2 * h) for e in np.eye(5)])
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-9)


class TestOptimality:
    def test_optimal_origin(self):
        inst = Instance(np.eye(2), [-1.0, -2.0])
        assert check_optimality(inst, make_iterate(inst, np.zeros(2)))

    def test_negative_gradient_on_lower(self):
        inst = Instance(np.eye(2), [1.0, 0.0])
        res = check_optimality(inst, make_iterate(inst, np.zeros(2)))
        assert not res
        assert (res.index, res.kind) == (0, "I0-negative-gradient")
        assert res.violation == 1.0

    def test_positive_gradient_on_upper(self):
        inst = Instance(np.eye(2), [0.0, 0.5], [1.0, 1.0])
        res = check_optimality(inst, make_iterate(inst, [1.0, 0.5]))
        assert (res.index, res.kind) == (0, "I1-positive-gradient")

    def test_free_gradient(self):
        inst = Instance(np.eye(2), [0.0, 0.5])
        res = check_optimality(inst, make_iterate(inst, [0.0, 0.2]))
        assert (res.index, res.kind) == (1, "J-nonzero-gradient")

    def test_stable_point_has_no_free_violation(self):
        inst = Instance([[1.0, 1.0], [1.0, -1.0]], [2.0, -5.0])
        # x = (0, t) with t the 1-d least-squares fit on column 2
        t = (2.0 + 5.0) / 2.0
        res = check_optimality(inst, make_iterate(inst, [0.0, t]))
        assert res.kind != "J-nonzero-gradient"

    def test_default_tolerance(self):
        inst = Instance(np.eye(2), [3.0, 4.0])
        assert default_opt_tol(inst) == pytest.approx(6e-9)
