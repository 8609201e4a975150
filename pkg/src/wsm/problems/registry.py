"""Builtin benchmark problems with hand-written gradients.

Constraint numbering follows the published test problems. Each builtin
carries a feasible default start and a sampling box for gradient checks.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from wsm.core import ConstraintFn, Problem, ProblemNotFound


def _fn(value, gradient, label=0, linear=False, expr=None) -> ConstraintFn:
    return ConstraintFn(value, lambda u: np.array(gradient(u), dtype=float), label, linear, expr)


def _affine(a, b, label) -> ConstraintFn:
    """``<a, u> + b``."""
    a = np.asarray(a, dtype=float)
    terms = [f"{float(c)!r}*x{i + 1}" for i, c in enumerate(a) if c != 0]
    if b != 0 or not terms:
        terms.append(repr(float(b)))
    return ConstraintFn(lambda u: float(a @ u) + b, lambda u: a.copy(), label, True,
                        " + ".join(f"({t})" for t in terms))


def _quadratic_expr(G, xbar) -> str:
    n = len(xbar)
    r = [f"(x{i + 1} - ({float(xbar[i])!r}))" for i in range(n)]
    rows = []
    for i in range(n):
        inner = " + ".join(f"({float(G[i][j])!r})*{r[j]}" for j in range(n))
        rows.append(f"{r[i]}*({inner})")
    return "0.5*(" + " + ".join(rows) + ")"


def _rosenbrock() -> ConstraintFn:
    return _fn(
        lambda u: (1 - u[0]) ** 2 + 100 * (u[1] - u[0] ** 2) ** 2,
        lambda u: (-2 * (1 - u[0]) - 400 * u[0] * (u[1] - u[0] ** 2), 200 * (u[1] - u[0] ** 2)),
        expr="(1 - x1)^2 + 100*(x2 - x1^2)^2",
    )


def rosenbrock_cubic() -> Problem:
    """Rosenbrock with a cubic and a line constraint; optimum (1, 1) with both active."""
    g1 = _fn(lambda u: (u[0] - 1) ** 3 - u[1] + 1,
             lambda u: (3 * (u[0] - 1) ** 2, -1.0), 1, expr="(x1 - 1)^3 - x2 + 1")
    g2 = _affine([1.0, 1.0], -2.0, 2)
    return Problem(2, _rosenbrock(), (g1, g2), name="rosenbrock-cubic",
                   start=np.array([0.5, 1.5]), box=((-1.5, 1.5), (-0.5, 2.5)))


def rosenbrock_disk() -> Problem:
    """Rosenbrock inside a disk of radius sqrt(2) with two excluded disks."""
    g1 = _fn(lambda u: u[0] ** 2 + u[1] ** 2 - 2,
             lambda u: (2 * u[0], 2 * u[1]), 1, expr="x1^2 + x2^2 - 2")
    g2 = _fn(lambda u: 0.16 - (u[0] - 1) ** 2 - u[1] ** 2,
             lambda u: (-2 * (u[0] - 1), -2 * u[1]), 2, expr="0.16 - (x1 - 1)^2 - x2^2")
    g3 = _fn(lambda u: 1 - u[0] ** 2 - (u[1] - 2) ** 2,
             lambda u: (-2 * u[0], -2 * (u[1] - 2)), 3, expr="1 - x1^2 - (x2 - 2)^2")
    return Problem(2, _rosenbrock(), (g1, g2, g3), name="rosenbrock-disk",
                   start=np.array([1.0, -1.0]), box=((-1.5, 1.5), (-1.5, 1.5)))


def mishra_bird() -> Problem:
    """Mishra's bird inside the disk centred at (-5, -5) plus a box."""

    def J(u):
        x, y = u[0], u[1]
        return (math.sin(y) * math.exp((1 - math.cos(x)) ** 2)
                + math.cos(x) * math.exp((1 - math.sin(y)) ** 2) + (x - y) ** 2)

    def dJ(u):
        x, y = u[0], u[1]
        a = math.exp((1 - math.cos(x)) ** 2)
        b = math.exp((1 - math.sin(y)) ** 2)
        dx = (math.sin(y) * a * 2 * (1 - math.cos(x)) * math.sin(x)
              - math.sin(x) * b + 2 * (x - y))
        dy = (math.cos(y) * a
              + math.cos(x) * b * 2 * (1 - math.sin(y)) * (-math.cos(y)) - 2 * (x - y))
        return dx, dy

    obj = _fn(J, dJ, expr="sin(x2)*exp((1 - cos(x1))^2) + cos(x1)*exp((1 - sin(x2))^2) + (x1 - x2)^2")
    g1 = _fn(lambda u: (u[0] + 5) ** 2 + (u[1] + 5) ** 2 - 25,
             lambda u: (2 * (u[0] + 5), 2 * (u[1] + 5)), 1, expr="(x1 + 5)^2 + (x2 + 5)^2 - 25")
    cons = (
        g1,
        _affine([1.0, 0.0], 1.0, 2),    # u1 + 1 <= 0
        _affine([-1.0, 0.0], -9.0, 3),  # -9 - u1 <= 0
        _affine([0.0, 1.0], 0.0, 4),    # u2 <= 0
        _affine([0.0, -1.0], -8.0, 5),  # -8 - u2 <= 0
    )
    return Problem(2, obj, cons, name="mishra-bird", start=np.array([-5.0, 0.0]),
                   box=((-10.0, 0.0), (-10.0, 0.0)))


# Feasible start for the Gomez-Levy problem. The published start (-1, -1)
# violates g7 = u1*u2 <= 0; this point was picked by a grid search over the
# feasible set for starts that reach the global minimizer, and it keeps
# g4 and g7 active so the run exercises active-set changes.
GOMEZ_LEVY_START = (0.0, -1.0)


def gomez_levy() -> Problem:
    """Six-hump camel objective with the Gomez-Levy sine constraint."""
    four_pi = 4 * math.pi
    two_pi = 2 * math.pi
    obj = _fn(
        lambda u: (4 * u[0] ** 2 - 2.1 * u[0] ** 4 + u[0] ** 6 / 3
                   + u[0] * u[1] - 4 * u[1] ** 2 + 4 * u[1] ** 4),
        lambda u: (8 * u[0] - 8.4 * u[0] ** 3 + 2 * u[0] ** 5 + u[1],
                   u[0] - 8 * u[1] + 16 * u[1] ** 3),
        expr="4*x1^2 - 2.1*x1^4 + x1^6/3 + x1*x2 - 4*x2^2 + 4*x2^4",
    )
    g1 = _fn(
        lambda u: -math.sin(four_pi * u[0]) + 2 * math.sin(two_pi * u[1]) ** 2 - 1.5,
        lambda u: (-four_pi * math.cos(four_pi * u[0]),
                   4 * math.sin(two_pi * u[1]) * math.cos(two_pi * u[1]) * two_pi),
        1, expr="-sin(4*pi*x1) + 2*sin(2*pi*x2)^2 - 1.5",
    )
    g7 = _fn(lambda u: u[0] * u[1], lambda u: (u[1], u[0]), 7, expr="x1*x2")
    cons = (
        g1,
        _affine([-1.0, 0.0], -1.0, 2),   # -1 - u1 <= 0
        _affine([1.0, 0.0], -0.75, 3),   # u1 - 0.75 <= 0
        _affine([0.0, -1.0], -1.0, 4),   # -1 - u2 <= 0
        _affine([0.0, 1.0], -1.0, 5),    # u2 - 1 <= 0
        _affine([-1.0, 1.0], 0.0, 6),    # u2 - u1 <= 0
        g7,
    )
    return Problem(2, obj, cons, name="gomez-levy", start=np.array(GOMEZ_LEVY_START),
                   box=((-1.0, 0.75), (-1.0, 1.0)))


DEFAULT_ORTHANT_G = ((4.0, 1.0, 0.5), (1.0, 3.0, -1.0), (0.5, -1.0, 2.0))
DEFAULT_ORTHANT_XBAR = (1.0, -2.0, 0.5)


def orthant_quadratic(G=DEFAULT_ORTHANT_G, xbar=DEFAULT_ORTHANT_XBAR, start=None) -> Problem:
    """``1/2 (x - xbar)^T G (x - xbar)`` over ``x >= 0`` (constraints ``-x_i <= 0``)."""
    G = np.asarray(G, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    n = xbar.size
    obj = _fn(lambda x: 0.5 * float((x - xbar) @ G @ (x - xbar)), lambda x: G @ (x - xbar),
              expr=_quadratic_expr(G, xbar))
    cons = tuple(_affine(-np.eye(n)[i], 0.0, i + 1) for i in range(n))
    if start is None:
        start = np.ones(n)
    return Problem(n, obj, cons, name="orthant-quadratic", start=start,
                   box=tuple((0.0, 3.0) for _ in range(n)))


DEFAULT_CONE_VECTORS = ((1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 1.0, 1.0))
DEFAULT_CONE_TARGET = (-1.0, 2.0, -0.5)


def cone_quadratic(vectors=DEFAULT_CONE_VECTORS, target=DEFAULT_CONE_TARGET, start=None) -> Problem:
    """``|sum_i x_i v_i - target|^2`` over ``x >= 0``; its minimizer projects ``target`` onto the cone."""
    V = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    w = np.asarray(target, dtype=float)
    n = V.shape[1]
    resid = [" + ".join(f"({float(V[r, c])!r})*x{c + 1}" for c in range(n)) + f" - ({float(w[r])!r})"
             for r in range(V.shape[0])]
    obj = _fn(lambda x: float(np.sum((V @ x - w) ** 2)), lambda x: 2 * V.T @ (V @ x - w),
              expr=" + ".join(f"({e})^2" for e in resid))
    cons = tuple(_affine(-np.eye(n)[i], 0.0, i + 1) for i in range(n))
    if start is None:
        start = np.ones(n)
    return Problem(n, obj, cons, name="cone-quadratic", start=start,
                   box=tuple((0.0, 3.0) for _ in range(n)))


def sphere_equality() -> Problem:
    """Linear objective on the unit circle, an equality-only instance."""
    obj = _fn(lambda u: u[0] + 2 * u[1], lambda u: (1.0, 2.0), expr="x1 + 2*x2")
    h1 = _fn(lambda u: u[0] ** 2 + u[1] ** 2 - 1, lambda u: (2 * u[0], 2 * u[1]), 1,
             expr="x1^2 + x2^2 - 1")
    return Problem(2, obj, (), (h1,), name="circle-equality", start=np.array([1.0, 0.0]),
                   box=((-1.5, 1.5), (-1.5, 1.5)))


BUILTINS: dict[str, Callable[[], Problem]] = {
    "rosenbrock-cubic": rosenbrock_cubic,
    "rosenbrock-disk": rosenbrock_disk,
    "mishra-bird": mishra_bird,
    "gomez-levy": gomez_levy,
    "orthant-quadratic": orthant_quadratic,
    "cone-quadratic": cone_quadratic,
    "circle-equality": sphere_equality,
}

# published optimizers and optimal values (four decimals)
REFERENCE_OPTIMA = {
    "rosenbrock-cubic": ((1.0, 1.0), 0.0),
    "rosenbrock-disk": ((1.0, 1.0), 0.0),
    "mishra-bird": ((-3.1302, -1.5821), -106.7645),
    "gomez-levy": ((0.0898, -0.7126), -1.0316),
}


def builtin(name: str) -> Problem:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ProblemNotFound(name, sorted(BUILTINS)) from None
    return factory()


def builtin_names() -> list[str]:
    return sorted(BUILTINS)


def problem_file_text(problem: Problem) -> str:
    """Render a builtin whose functions carry expressions as problem-file text."""
    lines = [f"dim {problem.dim}"]
    lines.append(f"objective {_expr_of(problem.objective, problem.dim)}")
    lines += [f"ineq {_expr_of(c, problem.dim)}" for c in problem.inequalities]
    lines += [f"eq {_expr_of(c, problem.dim)}" for c in problem.equalities]
    if problem.start is not None:
        lines.append("start " + " ".join(repr(float(v)) for v in problem.start))
    if problem.box is not None:
        lines.append("box " + " ".join(f"{lo!r} {hi!r}" for lo, hi in problem.box))
    return "\n".join(lines) + "\n"


def _expr_of(fn: ConstraintFn, dim: int) -> str:
    if fn.expr is not None:
        return fn.expr
    raise ValueError(f"function {fn.label} has no expression form")
