"""Shared types for the working set solver.

Points and directions are plain 1-D ``float64`` numpy arrays. A
:class:`Problem` bundles the objective with inequality constraints
``g_i(u) <= 0`` and equality constraints ``h_j(u) = 0``; every function
carries its own analytic gradient.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Evaluator = Callable[[np.ndarray], float]
GradEvaluator = Callable[[np.ndarray], np.ndarray]


class WSMError(Exception):
    """Base class for solver errors."""


class EvaluationError(WSMError):
    """A function returned a non-finite value (or hit a domain error)."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class LicqFailure(WSMError):
    """Constraint gradients are numerically linearly dependent."""


class InnerSolverStall(WSMError):
    """The orthant QP iteration hit its iteration cap."""


class NewtonStall(WSMError):
    """The correction Newton iteration failed to converge."""


class InternalProjectionError(WSMError):
    """A projection result contradicts the cone geometry beyond tolerance."""


class InvalidBounds(WSMError):
    """Two-sided bounds with ``a >= b``."""


class ProblemNotFound(WSMError, KeyError):
    def __init__(self, name: str, known: Sequence[str]):
        super().__init__(f"unknown problem {name!r}; known: {', '.join(known)}")
        self.name = name
        self.known = list(known)

    def __str__(self) -> str:
        return self.args[0]


def as_vector(values, dim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float array, optionally of length ``dim``."""
    v = np.array(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise ValueError("vector must have at least one entry")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected vector of length {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


@dataclass(frozen=True)
class ConstraintFn:
    """A scalar C^1 function with its gradient.

    ``label`` is the 1-based index within its list. ``linear`` marks
    affine functions, for which the feasibility correction is skipped.
    """

    value: Evaluator
    gradient: GradEvaluator
    label: int = 0
    linear: bool = False
    expr: str | None = None

    def __call__(self, u: np.ndarray) -> float:
        return self.value(u)


@dataclass(frozen=True)
class Problem:
    dim: int
    objective: ConstraintFn
    inequalities: tuple[ConstraintFn, ...] = ()
    equalities: tuple[ConstraintFn, ...] = ()
    name: str = "problem"
    start: np.ndarray | None = None
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        for group in (self.inequalities, self.equalities):
            labels = [c.label for c in group]
            if labels != list(range(1, len(group) + 1)):
                raise ValueError(f"constraint labels must run 1..{len(group)}, got {labels}")
        if self.start is not None:
            object.__setattr__(self, "start", as_vector(self.start, self.dim))

    @property
    def all_linear(self) -> bool:
        return all(c.linear for c in self.inequalities + self.equalities)

    def J(self, u: np.ndarray) -> float:
        return _finite(self.objective.value(u), "objective", 0)

    def grad_J(self, u: np.ndarray) -> np.ndarray:
        return _finite_vec(self.objective.gradient(u), "objective", 0)

    def g(self, u: np.ndarray) -> np.ndarray:
        return np.array(
            [_finite(c.value(u), "inequality", c.label) for c in self.inequalities], dtype=float
        )

    def h(self, u: np.ndarray) -> np.ndarray:
        return np.array(
            [_finite(c.value(u), "equality", c.label) for c in self.equalities], dtype=float
        )

    def g_grad(self, u: np.ndarray, index: int) -> np.ndarray:
        c = self.inequalities[index - 1]
        return _finite_vec(c.gradient(u), "inequality", index)

    def h_grad(self, u: np.ndarray, index: int) -> np.ndarray:
        c = self.equalities[index - 1]
        return _finite_vec(c.gradient(u), "equality", index)

    def sample_box(self) -> tuple[tuple[float, float], ...]:
        if self.box is not None:
            return self.box
        return tuple((-2.0, 2.0) for _ in range(self.dim))


def _finite(value, kind: str, index: int) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError, ArithmeticError) as exc:
        raise EvaluationError(f"{kind} {index}: {exc}", index) from exc
    if not math.isfinite(x):
        raise EvaluationError(f"{kind} {index} evaluated to {x}", index)
    return x


def _finite_vec(value, kind: str, index: int) -> np.ndarray:
    v = np.asarray(value, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise EvaluationError(f"gradient of {kind} {index} is not finite", index)
    return v


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and controls for :func:`wsm.solver.solve`.

    Defaults follow the published experiments: ``tau = 1``, ``eps = 1e-4``,
    active band ``|g_i| <= 1e-5``, strict inactivity ``g_i < -1e-7`` and
    the relative working-set test ``|<g_i', d>| <= 1e-5 ||d||``.
    """

    tau: float = 1.0
    eps: float = 1e-4
    feas_tol: float = 1e-7
    active_tol: float = 1e-5
    wis_rel_tol: float = 1e-5
    wis_abs_floor: float = 1e-12
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    max_outer_iter: int = 10000
    backtrack_factor: float = 0.5
    max_backtracks: int = 60
    normalize_direction: bool = False
    inner_eps: float = 1e-10
    inner_max_iter: int = 10000
    step_constant: float = 1.5
    licq_tol: float = 1e-12

    def __post_init__(self):
        for name in ("tau", "eps", "feas_tol", "active_tol", "wis_rel_tol", "newton_tol",
                     "inner_eps", "step_constant", "licq_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        for name in ("newton_max_iter", "max_outer_iter", "max_backtracks", "inner_max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    STALLED = "Stalled"
    INFEASIBLE_START = "InfeasibleStart"
    LICQ_FAILURE = "LicqFailure"


@dataclass(frozen=True)
class IterateRecord:
    """One row of a solve trace.

    ``t`` and ``corrections`` describe the step that produced ``u`` and are
    absent for the starting point. ``I_W`` is empty when the iterate
    terminated the run (the working set is not formed at KKT points).
    """

    k: int
    u: np.ndarray
    J: float
    d_norm: float
    I_A: tuple[int, ...]
    I_W: tuple[int, ...]
    t: float | None = None
    corrections: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class SolveReport:
    status: Status
    final_u: np.ndarray
    final_J: float
    final_d_norm: float
    multipliers_mu: dict[int, float]
    multipliers_lambda: dict[int, float]
    trace: list[IterateRecord]
    message: str = ""

    @property
    def iterations(self) -> int:
        return max(len(self.trace) - 1, 0)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


# -- feasibility ------------------------------------------------------------


@dataclass(frozen=True)
class Interior:
    pass


@dataclass(frozen=True)
class OnBoundary:
    active: tuple[int, ...]


@dataclass(frozen=True)
class Infeasible:
    # (kind, index, value) with kind "ineq" or "eq"
    violations: tuple[tuple[str, int, float], ...]


Feasibility = Interior | OnBoundary | Infeasible


def check_feasibility(problem: Problem, u: np.ndarray, feas_tol: float = 1e-7,
                      active_tol: float = 1e-5) -> Feasibility:
    """Classify ``u`` as interior, on the boundary, or infeasible.

    ``feas_tol`` is accepted for symmetry with :class:`SolverConfig`; the
    verdict itself only depends on ``active_tol``.
    """
    u = as_vector(u, problem.dim)
    g = problem.g(u)
    h = problem.h(u)
    violations = [("ineq", i + 1, float(v)) for i, v in enumerate(g) if v > active_tol]
    violations += [("eq", j + 1, float(v)) for j, v in enumerate(h) if abs(v) > active_tol]
    if violations:
        return Infeasible(tuple(violations))
    active = tuple(i + 1 for i, v in enumerate(g) if abs(v) <= active_tol)
    if active:
        return OnBoundary(active)
    return Interior()


def finite_diff_gradient(f: Evaluator, u, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of ``f`` at ``u``."""
    if not h > 0:
        raise ValueError("step h must be positive")
    u = np.asarray(u, dtype=float)
    grad = np.empty_like(u)
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = h
        fp = f(u + e)
        fm = f(u - e)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise EvaluationError(f"non-finite value while differencing coordinate {i + 1}", i + 1)
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def gradient_error(f: Evaluator, grad: GradEvaluator, u, h: float = 1e-6) -> float:
    """Relative discrepancy between ``grad`` and central differences of ``f``.

    Measured as ``max|fd - grad| / max(1, max|grad|)`` so that points with a
    vanishing gradient are judged on an absolute scale.
    """
    fd = finite_diff_gradient(f, u, h)
    an = np.asarray(grad(np.asarray(u, dtype=float)), dtype=float)
    if not np.all(np.isfinite(an)):
        raise EvaluationError("non-finite analytic gradient")
    return float(np.max(np.abs(fd - an)) / max(1.0, float(np.max(np.abs(an)))))
