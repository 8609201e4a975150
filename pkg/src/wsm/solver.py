"""The correctable steepest descent method (working set method).

Each outer iteration:

1. collect the active inequalities ``|g_i(u)| <= active_tol``;
2. project ``-J'(u)`` onto the active cone (plus the equality span) and
   stop when the residual direction ``d`` is shorter than ``eps``;
3. keep the active indices orthogonal to ``d`` as the working set, the
   rest are false actives that ``d`` moves away from;
4. backtrack an uncorrected step ``u + t d`` for sufficient decrease and
   strict feasibility of the inactive constraints;
5. starting from that stepsize, backtrack the Newton-corrected point
   until it is feasible and still decreases ``J`` by ``t/2 |d|^2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from wsm.cone import ConeBasis
from wsm.correction import CorrectionBasis, correct, correction_basis
from wsm.core import (
    ConstraintFn,
    EvaluationError,
    Infeasible,
    InvalidBounds,
    IterateRecord,
    LicqFailure,
    NewtonStall,
    Problem,
    SolveReport,
    SolverConfig,
    Status,
    WSMError,
    as_vector,
    check_feasibility,
)
from wsm.working_set import DirectionBundle, active_set, csdd, with_working_set

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LineSearchResult:
    t: float
    u_next: np.ndarray
    J_next: float
    backtracks: int
    corrected: bool
    corrections: np.ndarray = np.zeros(0)


class LineSearchFailure(WSMError):
    pass


def _margin(d_norm: float, scale: float) -> float:
    # sufficient-decrease coefficient: J(new) - J(u) < -t * margin
    return 0.5 * d_norm * d_norm / scale


def precorrection_linesearch(problem: Problem, u: np.ndarray, d: np.ndarray, I_A: Sequence[int],
                             J_u: float, cfg: SolverConfig, d_norm: float | None = None,
                             scale: float = 1.0) -> LineSearchResult:
    """First ``t = tau * beta^j`` whose plain step decreases ``J`` and keeps inactives strictly feasible.

    ``d_norm``/``scale`` let a normalized direction keep the margin of the
    unnormalized one.
    """
    if d_norm is None:
        d_norm = float(np.linalg.norm(d))
    margin = _margin(d_norm, scale)
    inactive = [i for i in range(1, len(problem.inequalities) + 1) if i not in set(I_A)]
    t = cfg.tau
    for j in range(cfg.max_backtracks + 1):
        trial = u + t * d
        try:
            J_t = problem.J(trial)
            ok = J_t - J_u < -t * margin
            if ok and inactive:
                g = problem.g(trial)
                ok = all(g[i - 1] < -cfg.feas_tol for i in inactive)
        except EvaluationError:
            ok = False
        if ok:
            return LineSearchResult(t, trial, J_t, j, False)
        t *= cfg.backtrack_factor
    raise LineSearchFailure("pre-correction line search exhausted its backtracks")


def _feasible_after_correction(problem: Problem, x: np.ndarray, I_A, I_W, cfg: SolverConfig,
                               corrected: bool) -> bool:
    g = problem.g(x)
    # Newton already drove working rows below newton_tol; the affine fast
    # path only has to stay inside the active band
    working_tol = cfg.newton_tol if corrected else cfg.active_tol
    for idx, v in enumerate(g, start=1):
        if idx in I_W:
            if abs(v) > working_tol:
                return False
        elif idx in I_A:
            if v > cfg.active_tol:
                return False
        elif not v < -cfg.feas_tol:
            return False
    if problem.equalities:
        h = problem.h(x)
        eq_tol = cfg.newton_tol if corrected else cfg.active_tol
        if np.any(np.abs(h) > eq_tol):
            return False
    return True


def corrected_linesearch(problem: Problem, u: np.ndarray, d: np.ndarray, I_A: Sequence[int],
                         I_W: Sequence[int], t_bar: float, J_u: float, cfg: SolverConfig,
                         d_norm: float | None = None, scale: float = 1.0,
                         basis: CorrectionBasis | None = None) -> LineSearchResult:
    """Backtrack from ``t_bar`` until the corrected point is feasible with sufficient decrease.

    When there is nothing to correct (no working or equality constraints,
    or all constraints are affine) the corrected point is ``u + t d``.
    """
    if d_norm is None:
        d_norm = float(np.linalg.norm(d))
    margin = _margin(d_norm, scale)
    I_A, I_W = set(I_A), set(I_W)
    skip = (not I_W and not problem.equalities) or problem.all_linear
    if basis is None and not skip:
        basis = correction_basis(problem, u, sorted(I_W))
    t = t_bar
    for j in range(cfg.max_backtracks + 1):
        try:
            if skip:
                x = u + t * d
                c = np.zeros(len(I_W) + len(problem.equalities))
            else:
                out = correct(problem, u, d, basis, t, cfg.newton_tol, cfg.newton_max_iter)
                x, c = out.u_t, out.c
            J_t = problem.J(x)
            ok = J_t - J_u < -t * margin and _feasible_after_correction(
                problem, x, I_A, I_W, cfg, corrected=not skip)
        except (NewtonStall, LicqFailure, EvaluationError) as exc:
            log.debug("correction failed at t=%g: %s", t, exc)
            ok = False
        if ok:
            return LineSearchResult(t, x, J_t, j, not skip, c)
        t *= cfg.backtrack_factor
    raise LineSearchFailure("corrected line search exhausted its backtracks")


def _record(k, u, J, bundle: DirectionBundle, t=None, c=None, I_W=()):
    return IterateRecord(
        k=k, u=u.copy(), J=J, d_norm=bundle.d_norm if bundle is not None else float("nan"),
        I_A=bundle.I_A if bundle is not None else (), I_W=tuple(I_W), t=t,
        corrections=np.zeros(0) if c is None else np.asarray(c, dtype=float),
    )


def solve(problem: Problem, u0, cfg: SolverConfig | None = None) -> SolveReport:
    """Run the working set method from the feasible start ``u0``."""
    cfg = cfg or SolverConfig()
    u = as_vector(u0, problem.dim)
    try:
        verdict = check_feasibility(problem, u, cfg.feas_tol, cfg.active_tol)
    except EvaluationError as exc:
        verdict = Infeasible((("eval", exc.index or 0, float("nan")),))
    if isinstance(verdict, Infeasible):
        J0 = float("nan")
        try:
            J0 = problem.J(u)
        except EvaluationError:
            pass
        return SolveReport(Status.INFEASIBLE_START, u, J0, float("nan"), {}, {}, [],
                           message=f"start violates {verdict.violations}")

    trace: list[IterateRecord] = []
    J_u = problem.J(u)
    t_prev, c_prev = None, None
    k = 0
    bundle = None
    while True:
        I_A = active_set(problem, u, cfg.active_tol)
        try:
            bundle = csdd(problem, u, I_A, inner_eps=cfg.inner_eps, max_iter=cfg.inner_max_iter,
                          step_constant=cfg.step_constant)
        except LicqFailure as exc:
            trace.append(IterateRecord(k, u.copy(), J_u, float("nan"), I_A, (), t_prev,
                                       np.zeros(0) if c_prev is None else c_prev))
            return SolveReport(Status.LICQ_FAILURE, u, J_u, float("nan"), {}, {}, trace,
                               message=str(exc))
        if bundle.d_norm < cfg.eps:
            trace.append(_record(k, u, J_u, bundle, t_prev, c_prev))
            return _report(Status.CONVERGED, bundle, J_u, trace)
        bundle = with_working_set(bundle, cfg.wis_rel_tol, cfg.wis_abs_floor)
        trace.append(_record(k, u, J_u, bundle, t_prev, c_prev, bundle.I_W))
        try:
            # the correction needs independent working and equality gradients
            ConeBasis(tuple(bundle.edge_grads[i] for i in bundle.I_W), bundle.eq_grads,
                      dim=problem.dim)
        except LicqFailure as exc:
            return _report(Status.LICQ_FAILURE, bundle, J_u, trace, str(exc))
        if k >= cfg.max_outer_iter:
            return _report(Status.MAX_ITERATIONS, bundle, J_u, trace)

        d = bundle.d
        scale = 1.0
        if cfg.normalize_direction:
            scale = max(1.0, bundle.d_norm)
            d = d / scale
        try:
            pre = precorrection_linesearch(problem, u, d, bundle.I_A, J_u, cfg,
                                           d_norm=bundle.d_norm, scale=scale)
            step = corrected_linesearch(problem, u, d, bundle.I_A, bundle.I_W, pre.t, J_u, cfg,
                                        d_norm=bundle.d_norm, scale=scale)
        except LineSearchFailure as exc:
            return _report(Status.STALLED, bundle, J_u, trace, str(exc))
        u, J_u = step.u_next, step.J_next
        t_prev, c_prev = step.t, step.corrections
        k += 1


def _report(status: Status, bundle: DirectionBundle, J_u: float, trace, message="") -> SolveReport:
    mu = {i: max(0.0, m) for i, m in bundle.mu.items()}
    return SolveReport(status, bundle.u.copy(), J_u, bundle.d_norm, mu, dict(bundle.lam),
                       trace, message)


def transform_two_sided(dim: int, objective: ConstraintFn,
                        bounded: Sequence[tuple[ConstraintFn, float, float]],
                        one_sided: Sequence[ConstraintFn] = (),
                        equalities: Sequence[ConstraintFn] = (),
                        name: str = "two-sided", **kwargs) -> Problem:
    """Rewrite ``a_i <= g_i(u) <= b_i`` as ``g_i - b_i <= 0`` and ``a_i - g_i <= 0``.

    The ``m`` upper sides come first, then the ``m`` lower sides; any
    already one-sided constraints are appended after them.
    """
    uppers, lowers = [], []
    for fn, a, b in bounded:
        if not a < b:
            raise InvalidBounds(f"lower bound {a} must be below upper bound {b}")
        uppers.append((fn, b))
        lowers.append((fn, a))
    ineqs = []
    for fn, b in uppers:
        ineqs.append(ConstraintFn(
            value=lambda u, fn=fn, b=b: fn.value(u) - b,
            gradient=lambda u, fn=fn: np.asarray(fn.gradient(u), dtype=float),
            label=len(ineqs) + 1, linear=fn.linear,
        ))
    for fn, a in lowers:
        ineqs.append(ConstraintFn(
            value=lambda u, fn=fn, a=a: a - fn.value(u),
            gradient=lambda u, fn=fn: -np.asarray(fn.gradient(u), dtype=float),
            label=len(ineqs) + 1, linear=fn.linear,
        ))
    for fn in one_sided:
        ineqs.append(ConstraintFn(fn.value, fn.gradient, len(ineqs) + 1, fn.linear, fn.expr))
    eqs = [ConstraintFn(fn.value, fn.gradient, j + 1, fn.linear, fn.expr)
           for j, fn in enumerate(equalities)]
    return Problem(dim, objective, tuple(ineqs), tuple(eqs), name=name, **kwargs)
