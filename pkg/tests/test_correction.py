import math

import numpy as np
import pytest

from wsm import builtin
from wsm.core import ConstraintFn, LicqFailure, NewtonStall, Problem
from wsm.correction import CorrectionBasis, correct, correction_basis, superlinearity_probe


def _disk_point(theta):
    u = math.sqrt(2) * np.array([math.cos(theta), math.sin(theta)])
    return u, np.array([-math.sin(theta), math.cos(theta)])


def test_linear_constraints_need_no_correction():
    p = builtin("orthant-quadratic")
    u = np.array([0.0, 1.0, 1.0])
    basis = correction_basis(p, u, [1])
    d = np.array([0.0, -0.5, 0.25])
    out = correct(p, u, d, basis, 0.5)
    np.testing.assert_array_equal(out.c, [0.0])
    np.testing.assert_array_equal(out.u_t, u + 0.5 * d)
    assert out.newton_iters in (0, 1)


def test_zero_step_is_zero_correction():
    p = builtin("rosenbrock-disk")
    u, tangent = _disk_point(0.4)
    out = correct(p, u, tangent, correction_basis(p, u, [1]), 0.0)
    np.testing.assert_array_equal(out.c, [0.0])
    np.testing.assert_array_equal(out.u_t, u)


@pytest.mark.parametrize("theta", [0.1, 1.3, 2.9, 4.4])
def test_disk_step_returns_to_circle(theta):
    p = builtin("rosenbrock-disk")
    u, tangent = _disk_point(theta)
    out = correct(p, u, tangent, correction_basis(p, u, [1]), 0.05, newton_tol=1e-12)
    assert abs(out.u_t @ out.u_t - 2.0) <= 1e-12
    assert out.residual_norm <= 1e-12


def test_equality_rows_use_h():
    p = builtin("circle-equality")
    u = np.array([1.0, 0.0])
    basis = correction_basis(p, u, [])
    assert basis.rows == (("eq", 1),)
    out = correct(p, u, np.array([0.0, 1.0]), basis, 0.1)
    assert abs(out.u_t @ out.u_t - 1.0) <= 1e-10


def test_singular_basis_raises_licq():
    p = builtin("rosenbrock-disk")
    u, tangent = _disk_point(0.3)
    g = p.g_grad(u, 1)
    basis = CorrectionBasis((("ineq", 1), ("ineq", 1)), (g, g))
    with pytest.raises(LicqFailure):
        correct(p, u, tangent, basis, 0.1)


def test_iteration_cap_raises_stall():
    p = builtin("rosenbrock-disk")
    u, tangent = _disk_point(0.3)
    with pytest.raises(NewtonStall):
        correct(p, u, tangent, correction_basis(p, u, [1]), 0.5, newton_tol=1e-15, newton_max_iter=1)


def test_unsolvable_system_stalls():
    # g = u1^2 + 1 has no root, so Newton cannot reach the surface
    g = ConstraintFn(lambda u: u[0] ** 2 + 1.0, lambda u: np.array([2 * u[0], 0.0]), 1)
    p = Problem(2, ConstraintFn(lambda u: 0.0, lambda u: np.zeros(2)), (g,), ())
    basis = CorrectionBasis((("ineq", 1),), (np.array([1.0, 0.0]),))
    with pytest.raises((NewtonStall, LicqFailure)):
        correct(p, np.zeros(2), np.array([0.0, 1.0]), basis, 0.1)


@pytest.mark.parametrize("theta", [0.3, 1.1, 2.0, 3.5, 5.2])
def test_probe_ratio_decays(theta):
    p = builtin("rosenbrock-disk")
    u, tangent = _disk_point(theta)
    ratios = [r for _, r in superlinearity_probe(p, u, tangent, correction_basis(p, u, [1]),
                                                   [1e-2, 1e-3, 1e-4])]
    assert ratios[1] <= 0.2 * ratios[0]
    assert ratios[2] <= 0.2 * ratios[1]


def test_probe_linear_is_zero():
    p = builtin("orthant-quadratic")
    u = np.array([0.0, 1.0, 1.0])
    out = superlinearity_probe(p, u, np.array([0.0, 1.0, 0.0]), correction_basis(p, u, [1]), [1e-1, 1e-2])
    assert [r for _, r in out] == [0.0, 0.0]


def test_probe_empty_list():
    p = builtin("rosenbrock-disk")
    u, tangent = _disk_point(0.3)
    assert superlinearity_probe(p, u, tangent, correction_basis(p, u, [1]), []) == []
