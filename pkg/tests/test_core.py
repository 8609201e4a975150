import math

import numpy as np
import pytest

from wsm import builtin
from wsm.core import (
    ConstraintFn,
    EvaluationError,
    Infeasible,
    Interior,
    OnBoundary,
    Problem,
    ProblemNotFound,
    SolverConfig,
    Status,
    as_vector,
    check_feasibility,
    finite_diff_gradient,
    gradient_error,
)


def _quad(label=0):
    return ConstraintFn(lambda u: float(u @ u), lambda u: 2 * u, label)


class TestCheckFeasibility:
    def test_rosenbrock_cubic_origin_on_g1(self):
        p = builtin("rosenbrock-cubic")
        np.testing.assert_allclose(p.g(np.zeros(2)), [0.0, -2.0])
        assert check_feasibility(p, (0.0, 0.0)) == OnBoundary((1,))

    def test_rosenbrock_cubic_published_start_on_g2(self):
        p = builtin("rosenbrock-cubic")
        np.testing.assert_allclose(p.g(np.array([0.5, 1.5])), [-0.625, 0.0])
        assert check_feasibility(p, (0.5, 1.5)) == OnBoundary((2,))

    def test_interior(self):
        p = builtin("rosenbrock-cubic")
        assert check_feasibility(p, (0.5, 1.0)) == Interior()

    def test_infeasible_lists_every_violation(self):
        p = builtin("rosenbrock-cubic")
        verdict = check_feasibility(p, (2.0, 2.0))
        assert isinstance(verdict, Infeasible)
        assert verdict.violations == (("ineq", 2, 2.0),)
        verdict = check_feasibility(p, (2.0, 0.5))
        assert [(k, i) for k, i, _ in verdict.violations] == [("ineq", 1), ("ineq", 2)]

    def test_equality_violation(self):
        p = builtin("circle-equality")
        verdict = check_feasibility(p, (0.5, 0.0))
        assert isinstance(verdict, Infeasible)
        assert verdict.violations[0][:2] == ("eq", 1)

    def test_nonfinite_value_carries_index(self):
        bad = ConstraintFn(lambda u: math.nan, lambda u: np.zeros(1), 1)
        p = Problem(1, _quad(), (bad,), ())
        with pytest.raises(EvaluationError) as info:
            check_feasibility(p, (0.0,))
        assert info.value.index == 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            check_feasibility(builtin("rosenbrock-cubic"), (1.0, 2.0, 3.0))


class TestFiniteDifferences:
    def test_square(self):
        g = finite_diff_gradient(lambda u: u[0] ** 2, np.array([3.0]), h=1e-5)
        np.testing.assert_allclose(g, [6.0], atol=1e-8)

    def test_rosenbrock_stationary(self):
        f = builtin("rosenbrock-cubic").objective.value
        np.testing.assert_allclose(finite_diff_gradient(f, np.array([1.0, 1.0])), [0, 0], atol=1e-6)

    def test_mishra_matches_analytic(self):
        obj = builtin("mishra-bird").objective
        assert gradient_error(obj.value, obj.gradient, np.array([-5.0, 0.0])) <= 1e-6

    def test_wrong_gradient_detected(self):
        assert gradient_error(lambda u: float(u @ u), lambda u: u, np.array([1.0, 2.0])) > 0.1

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            finite_diff_gradient(lambda u: 0.0, np.zeros(1), h=0.0)


class TestProblem:
    def test_labels_must_be_sequential(self):
        with pytest.raises(ValueError):
            Problem(1, _quad(), (_quad(2),), ())

    def test_all_linear(self):
        assert builtin("orthant-quadratic").all_linear
        assert not builtin("mishra-bird").all_linear

    def test_sample_box_default(self):
        p = Problem(3, _quad(), (), ())
        assert p.sample_box() == ((-2.0, 2.0),) * 3

    def test_as_vector(self):
        np.testing.assert_array_equal(as_vector([1, 2]), [1.0, 2.0])
        with pytest.raises(ValueError):
            as_vector([1, 2], dim=3)


class TestConfig:
    def test_defaults_follow_published_settings(self):
        cfg = SolverConfig()
        assert (cfg.tau, cfg.eps, cfg.active_tol, cfg.feas_tol, cfg.wis_rel_tol) == (
            1.0, 1e-4, 1e-5, 1e-7, 1e-5)

    @pytest.mark.parametrize("field", ["eps", "tau", "active_tol"])
    def test_rejects_nonpositive(self, field):
        with pytest.raises(ValueError):
            SolverConfig(**{field: 0.0})

    def test_rejects_bad_backtrack_factor(self):
        with pytest.raises(ValueError):
            SolverConfig(backtrack_factor=1.0)


def test_status_values():
    assert Status.CONVERGED.value == "Converged"
    assert Status("InfeasibleStart") is Status.INFEASIBLE_START


def test_problem_not_found_lists_known():
    with pytest.raises(ProblemNotFound) as info:
        builtin("nope")
    assert "rosenbrock-cubic" in str(info.value)
