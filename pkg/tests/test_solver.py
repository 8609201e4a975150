import math

import numpy as np
import pytest

from wsm import builtin, solve
from wsm.core import ConstraintFn, InvalidBounds, Problem, SolverConfig, Status
from wsm.solver import (
    LineSearchFailure,
    corrected_linesearch,
    precorrection_linesearch,
    transform_two_sided,
)


def _fn(value, grad, label=0, linear=False):
    return ConstraintFn(value, lambda u: np.asarray(grad(u), dtype=float), label, linear)


def _circle(label, r2=1.0):
    return _fn(lambda u: u[0] ** 2 + u[1] ** 2 - r2, lambda u: (2 * u[0], 2 * u[1]), label)


class TestSolve:
    def test_rosenbrock_cubic_published_start(self):
        r = solve(builtin("rosenbrock-cubic"), (0.5, 1.5))
        assert r.status is Status.CONVERGED
        np.testing.assert_allclose(r.final_u, [1, 1], atol=1e-3)
        assert set(r.trace[-1].I_A) <= {1, 2}

    def test_unconstrained_quadratic(self):
        a = np.array([1.0, -2.0, 0.5])
        obj = _fn(lambda u: 0.5 * float((u - a) @ (u - a)), lambda u: u - a)
        r = solve(Problem(3, obj), np.zeros(3))
        assert r.status is Status.CONVERGED
        assert np.linalg.norm(r.final_u - a) < 1e-4

    def test_gomez_levy(self):
        p = builtin("gomez-levy")
        r = solve(p, p.start)
        assert r.status is Status.CONVERGED
        np.testing.assert_allclose(r.final_u, [0.0898, -0.7126], atol=1e-2)

    def test_orthant_multipliers_match_gradient(self):
        p = builtin("orthant-quadratic")
        r = solve(p, p.start, SolverConfig(eps=1e-8))
        grad = p.grad_J(r.final_u)
        for i in r.trace[-1].I_A:
            assert r.multipliers_mu[i] == pytest.approx(grad[i - 1], abs=1e-6)
        assert all(m >= 0 for m in r.multipliers_mu.values())

    def test_equality_only(self):
        r = solve(builtin("circle-equality"), (1.0, 0.0))
        assert r.status is Status.CONVERGED
        np.testing.assert_allclose(r.final_u, [-1 / math.sqrt(5), -2 / math.sqrt(5)], atol=1e-4)
        assert abs(r.multipliers_lambda[1]) == pytest.approx(math.sqrt(5) / 2, abs=1e-3)
        for rec in r.trace:
            assert abs(rec.u @ rec.u - 1) <= 1e-10

    def test_deterministic(self):
        p = builtin("rosenbrock-disk")
        a, b = solve(p, p.start), solve(p, p.start)
        assert len(a.trace) == len(b.trace)
        for x, y in zip(a.trace, b.trace):
            assert np.array_equal(x.u, y.u) and x.J == y.J and x.I_A == y.I_A and x.t == y.t

    def test_monotone_and_feasible(self):
        p = builtin("mishra-bird")
        r = solve(p, p.start)
        for prev, cur in zip(r.trace, r.trace[1:]):
            assert cur.J < prev.J
            assert np.all(p.g(cur.u) <= 1e-5)

    def test_active_set_grows(self):
        p = builtin("orthant-quadratic")
        r = solve(p, p.start)
        sizes = [len(rec.I_A) for rec in r.trace]
        assert sizes[0] == 0 and max(sizes) > 0

    def test_active_set_sheds_false_actives(self):
        p = builtin("rosenbrock-disk")
        r = solve(p, p.start)
        assert r.trace[0].I_A == (1,) and r.trace[0].I_W == ()
        assert r.trace[1].I_A == ()

    def test_infeasible_start(self):
        r = solve(builtin("gomez-levy"), (-1.0, -1.0))
        assert r.status is Status.INFEASIBLE_START
        assert r.trace == []
        assert "7" in r.message

    def test_max_iterations(self):
        p = builtin("rosenbrock-disk")
        r = solve(p, p.start, SolverConfig(max_outer_iter=5))
        assert r.status is Status.MAX_ITERATIONS
        assert len(r.trace) == 6

    def test_stalled_when_backtracks_run_out(self):
        p = builtin("rosenbrock-cubic")
        r = solve(p, p.start, SolverConfig(tau=1e6, max_backtracks=2))
        assert r.status is Status.STALLED

    def test_dependent_working_gradients_report_licq(self):
        obj = _fn(lambda u: u[1], lambda u: (0.0, 1.0))
        p = Problem(2, obj, (_circle(1), _circle(2)))
        r = solve(p, (1.0, 0.0))
        assert r.status is Status.LICQ_FAILURE

    def test_normalized_direction(self):
        r = solve(builtin("rosenbrock-cubic"), (0.5, 1.5), SolverConfig(normalize_direction=True))
        assert r.status is Status.CONVERGED
        np.testing.assert_allclose(r.final_u, [1, 1], atol=1e-3)


class TestPrecorrection:
    cfg = SolverConfig()

    def test_linear_objective_takes_full_step(self):
        p = Problem(2, _fn(lambda u: -u[0], lambda u: (-1.0, 0.0)))
        res = precorrection_linesearch(p, np.zeros(2), np.array([1.0, 0.0]), (), 0.0, self.cfg)
        assert (res.t, res.backtracks, res.corrected) == (1.0, 0, False)

    def test_quadratic_margin(self):
        # J(t d) - J(0) = -t + 10 t^2, so the margin needs t < 1/20
        p = Problem(1, _fn(lambda u: -u[0] + 10 * u[0] ** 2, lambda u: (-1 + 20 * u[0],)))
        res = precorrection_linesearch(p, np.zeros(1), np.array([1.0]), (), 0.0, self.cfg)
        assert res.t == 1 / 32 and res.backtracks == 5

    def test_inactive_constraints_stay_strict(self):
        g = _fn(lambda u: u[0] - 0.3, lambda u: (1.0,), 1, linear=True)
        p = Problem(1, _fn(lambda u: -u[0], lambda u: (-1.0,)), (g,))
        res = precorrection_linesearch(p, np.zeros(1), np.array([1.0]), (), 0.0, self.cfg)
        assert res.t == 0.25

    def test_exhausted(self):
        p = Problem(1, _fn(lambda u: u[0], lambda u: (1.0,)))
        with pytest.raises(LineSearchFailure):
            precorrection_linesearch(p, np.zeros(1), np.array([1.0]), (), 0.0,
                                     SolverConfig(max_backtracks=3))


class TestCorrected:
    cfg = SolverConfig()

    def test_all_linear_keeps_step(self):
        p = builtin("orthant-quadratic")
        u = np.array([0.0, 1.0, 1.0])
        d = -p.grad_J(u)
        d[0] = 0.0
        pre = precorrection_linesearch(p, u, d, (1,), p.J(u), self.cfg)
        res = corrected_linesearch(p, u, d, (1,), (1,), pre.t, p.J(u), self.cfg)
        assert res.t == pre.t
        np.testing.assert_array_equal(res.u_next, pre.u_next)

    def test_disk_boundary_step(self):
        p = Problem(2, _fn(lambda u: -u[1], lambda u: (0.0, -1.0)), (_circle(1, 2.0),))
        u = np.array([math.sqrt(2), 0.0])
        d = np.array([0.0, 1.0])
        pre = precorrection_linesearch(p, u, d, (1,), p.J(u), self.cfg)
        res = corrected_linesearch(p, u, d, (1,), (1,), pre.t, p.J(u), self.cfg)
        assert res.corrected
        assert abs(res.u_next @ res.u_next - 2) <= self.cfg.newton_tol
        assert res.J_next - p.J(u) <= -(res.t / 2) * 1.0

    def test_failed_correction_halves_step(self):
        # g1 is undefined for u1 > 0.75, so the trial at t = 1 cannot be corrected
        g1 = _fn(lambda u: u[1] - u[0] ** 2 if u[0] <= 0.75 else math.nan,
                 lambda u: (-2 * u[0], 1.0), 1)
        p = Problem(2, _fn(lambda u: -u[0], lambda u: (-1.0, 0.0)), (g1,))
        res = corrected_linesearch(p, np.zeros(2), np.array([1.0, 0.0]), (1,), (1,), 1.0, 0.0, self.cfg)
        assert (res.t, res.backtracks) == (0.5, 1)
        assert abs(p.g(res.u_next)[0]) <= self.cfg.newton_tol


class TestTransformTwoSided:
    objective = _fn(lambda u: u[0] ** 2, lambda u: (2 * u[0], 0.0))
    u1 = _fn(lambda u: u[0], lambda u: (1.0, 0.0), linear=True)

    def test_interval(self):
        p = transform_two_sided(2, self.objective, [(self.u1, -1.0, 1.0)])
        u = np.array([0.25, 7.0])
        np.testing.assert_allclose(p.g(u), [0.25 - 1, -1 - 0.25])
        np.testing.assert_allclose(p.g_grad(u, 2), [-1, 0])
        assert p.all_linear

    def test_equal_bounds_rejected(self):
        with pytest.raises(InvalidBounds):
            transform_two_sided(2, self.objective, [(self.u1, 1.0, 1.0)])

    def test_mishra_box_matches_builtin(self):
        p = transform_two_sided(2, self.objective, [(self.u1, -9.0, -1.0)])
        ref = builtin("mishra-bird")
        rng = np.random.default_rng(0)
        for u in rng.uniform(-10, 0, size=(20, 2)):
            np.testing.assert_allclose(p.g(u), ref.g(u)[1:3], atol=1e-14)

    def test_one_sided_appended(self):
        extra = _fn(lambda u: u[1], lambda u: (0.0, 1.0), 7)
        p = transform_two_sided(2, self.objective, [(self.u1, -1.0, 1.0)], one_sided=[extra])
        assert [c.label for c in p.inequalities] == [1, 2, 3]
        assert p.g(np.array([0.0, 5.0]))[2] == 5.0


# Iterates printed (four decimals) in the published benchmark tables; the
# reference tables number the start as u^(1), so their u^(k) is trace[k - 1] here.
PUBLISHED_ITERATES = [
    ("rosenbrock-disk", (1.0, -1.0), {2: (0.6094, -0.8047), 921: (0.9999, 0.9998)}),
    ("rosenbrock-disk", (1.25, math.sqrt(7) / 4),
     {2: (1.0298, 0.7494), 3: (0.9672, 0.7798), 616: (0.9999, 0.9998)}),
    ("rosenbrock-cubic", (0.0, 1.0),
     {2: (0.0078, 0.2188), 3: (0.0130, 0.1333), 4: (0.0182, 0.0813), 5: (0.0207, 0.0655),
      6: (0.0210, 0.0639), 7: (0.0212, 0.0631), 8: (0.0213, 0.0627), 9: (0.0213, 0.0626),
      13: (0.0017, 0.0051), 14: (0.0013, 0.0039), 15: (0.0012, 0.0035), 16: (0.0011, 0.0034)}),
    ("mishra-bird", (-1.0, -8.0), {2: (-2.8431, -8.0000), 3: (-3.1473, -7.8206),
                                   18: (-3.1757, -7.8198)}),
]


@pytest.mark.parametrize("name,start,rows", PUBLISHED_ITERATES)
def test_published_iterates(name, start, rows):
    trace = solve(builtin(name), start).trace
    for k, u in rows.items():
        np.testing.assert_allclose(trace[k - 1].u, u, atol=6e-5)


def test_published_iteration_counts():
    cases = [("rosenbrock-cubic", (0.0, 0.0), 9), ("rosenbrock-cubic", (0.5, 1.5), 6),
             ("rosenbrock-cubic", (0.0, 1.0), 20), ("rosenbrock-disk", (1.0, -1.0), 921),
             ("rosenbrock-disk", (1.25, math.sqrt(7) / 4), 616), ("mishra-bird", (-1.0, -8.0), 18)]
    for name, start, count in cases:
        assert len(solve(builtin(name), start).trace) == count, (name, start)
