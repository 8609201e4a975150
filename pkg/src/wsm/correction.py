"""Newton correction that returns a trial step to the working constraint surfaces.

Given a point ``u``, a direction ``d`` and basis vectors ``b_1..b_k`` (the
working inequality gradients and the equality gradients, all evaluated at
``u``), solve for ``c`` in

    F(c) = [f_i(u + t d + B c)]_i = 0,

where ``f_i`` are the corresponding constraint functions. The basis stays
frozen at ``u``; only the residual and its Jacobian move.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from wsm.core import EvaluationError, LicqFailure, NewtonStall, Problem


@dataclass(frozen=True)
class CorrectionOutcome:
    u_t: np.ndarray
    c: np.ndarray
    newton_iters: int
    residual_norm: float


@dataclass(frozen=True)
class CorrectionBasis:
    """Constraint selection plus their gradients at the base point.

    ``rows`` holds ``("ineq", i)`` / ``("eq", j)`` pairs in column order.
    """

    rows: tuple[tuple[str, int], ...]
    vectors: tuple[np.ndarray, ...]

    @property
    def size(self) -> int:
        return len(self.rows)

    def matrix(self, dim: int) -> np.ndarray:
        if not self.vectors:
            return np.zeros((dim, 0))
        return np.column_stack(self.vectors)


def correction_basis(problem: Problem, u: np.ndarray, I_W: Sequence[int],
                     include_equalities: bool = True) -> CorrectionBasis:
    rows = [("ineq", i) for i in sorted(I_W)]
    if include_equalities:
        rows += [("eq", j) for j in range(1, len(problem.equalities) + 1)]
    vectors = tuple(_grad(problem, u, r) for r in rows)
    return CorrectionBasis(tuple(rows), vectors)


def _value(problem: Problem, x, row) -> float:
    kind, i = row
    fn = problem.inequalities[i - 1] if kind == "ineq" else problem.equalities[i - 1]
    v = float(fn.value(x))
    if not np.isfinite(v):
        raise EvaluationError(f"{kind} {i} is not finite at the corrected point", i)
    return v


def _grad(problem: Problem, x, row) -> np.ndarray:
    kind, i = row
    return problem.g_grad(x, i) if kind == "ineq" else problem.h_grad(x, i)


def correct(problem: Problem, u: np.ndarray, d: np.ndarray, basis: CorrectionBasis, t: float,
            newton_tol: float = 1e-10, newton_max_iter: int = 25) -> CorrectionOutcome:
    """Solve for the correction coefficients at stepsize ``t`` by Newton's method.

    The first Newton step uses the Gram matrix of the basis as Jacobian;
    later steps use ``<f_i'(x), b_j>`` at the current corrected point.
    Raises :class:`LicqFailure` on a singular Jacobian and
    :class:`NewtonStall` when the iteration cap is hit or diverges.
    """
    u = np.asarray(u, dtype=float)
    base = u + t * np.asarray(d, dtype=float)
    k = basis.size
    if k == 0:
        return CorrectionOutcome(base, np.zeros(0), 0, 0.0)
    B = basis.matrix(problem.dim)
    c = np.zeros(k)
    x = base
    F = np.array([_value(problem, x, r) for r in basis.rows])
    res = float(np.max(np.abs(F)))
    it = 0
    while res > newton_tol:
        if it >= newton_max_iter:
            raise NewtonStall(f"residual {res:.3e} after {it} Newton steps")
        if it == 0:
            Jac = B.T @ B
        else:
            Jac = np.array([_grad(problem, x, r) for r in basis.rows]) @ B
        try:
            if np.linalg.cond(Jac) > 1e12:
                raise LicqFailure("singular correction Jacobian")
            delta = np.linalg.solve(Jac, -F)
        except np.linalg.LinAlgError as exc:
            raise LicqFailure(str(exc)) from exc
        c = c + delta
        x = base + B @ c
        it += 1
        try:
            F = np.array([_value(problem, x, r) for r in basis.rows])
        except EvaluationError as exc:
            raise NewtonStall(str(exc)) from exc
        res = float(np.max(np.abs(F)))
        if not np.isfinite(res):
            raise NewtonStall("Newton iteration diverged")
    return CorrectionOutcome(x, c, it, res)


def superlinearity_probe(problem: Problem, u: np.ndarray, d: np.ndarray, basis: CorrectionBasis,
                         t_list: Sequence[float], newton_tol: float = 1e-13,
                         newton_max_iter: int = 50) -> list[tuple[float, float]]:
    """Ratios ``|B c(t)| / t`` for each ``t``; they should shrink with ``t``."""
    B = basis.matrix(problem.dim)
    out = []
    for t in t_list:
        outcome = correct(problem, u, d, basis, t, newton_tol, newton_max_iter)
        out.append((float(t), float(np.linalg.norm(B @ outcome.c)) / t))
    return out
