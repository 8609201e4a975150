"""Active set, search direction and working set at a feasible point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wsm.cone import ConeBasis, ProjectionResult, project_onto_cone, span_projection_coeffs
from wsm.core import InternalProjectionError, Problem


@dataclass(frozen=True)
class DirectionBundle:
    """Everything derived from ``-J'(u)`` and its cone projection at ``u``.

    ``mu`` and ``lam`` map constraint labels to multipliers. ``I_W`` and
    ``fai`` are only meaningful once :func:`with_working_set` has run.
    """

    u: np.ndarray
    grad: np.ndarray
    d: np.ndarray
    d_norm: float
    I_A: tuple[int, ...]
    I_W: tuple[int, ...]
    mu: dict[int, float]
    lam: dict[int, float]
    proj: np.ndarray
    edge_grads: dict[int, np.ndarray]
    eq_grads: tuple[np.ndarray, ...]

    @property
    def fai(self) -> tuple[int, ...]:
        return tuple(i for i in self.I_A if i not in self.I_W)


def active_set(problem: Problem, u: np.ndarray, active_tol: float = 1e-5) -> tuple[int, ...]:
    g = problem.g(u)
    return tuple(i + 1 for i, v in enumerate(g) if abs(v) <= active_tol)


def _basis(problem: Problem, u, I_A, check=True):
    edge_grads = {i: problem.g_grad(u, i) for i in I_A}
    eq_grads = tuple(problem.h_grad(u, j) for j in range(1, len(problem.equalities) + 1))
    basis = ConeBasis(tuple(edge_grads[i] for i in I_A), eq_grads, dim=problem.dim, check=check)
    return basis, edge_grads, eq_grads


def csdd(problem: Problem, u: np.ndarray, I_A, **proj_kwargs) -> DirectionBundle:
    """Correctable steepest descent direction ``d = -J'(u) - P(-J'(u))``.

    The projection is onto the cone spanned by the active gradients plus
    the span of all equality gradients. With no constraints at all ``d`` is
    just ``-J'(u)``. Dependent active gradients are tolerated here (the
    projected point is still unique); the working set built from ``d`` must
    be independent for the correction step, which the solver checks.
    """
    I_A = tuple(sorted(I_A))
    grad = problem.grad_J(u)
    basis, edge_grads, eq_grads = _basis(problem, u, I_A, check=False)
    proj_kwargs.setdefault("allow_dependent", True)
    res: ProjectionResult = project_onto_cone(basis, -grad, **proj_kwargs)
    d = res.residual
    mu = {i: float(m) for i, m in zip(I_A, res.mu)}
    lam = {j + 1: float(x) for j, x in enumerate(res.lam)}
    return DirectionBundle(
        u=np.asarray(u, dtype=float), grad=grad, d=d, d_norm=float(np.linalg.norm(d)),
        I_A=I_A, I_W=(), mu=mu, lam=lam, proj=res.point,
        edge_grads=edge_grads, eq_grads=eq_grads,
    )


def working_index_set(I_A, edge_grads: dict[int, np.ndarray], d: np.ndarray,
                      wis_rel_tol: float = 1e-5, abs_floor: float = 1e-12) -> tuple[int, ...]:
    """Active indices whose gradients are (numerically) orthogonal to ``d``.

    Everything else in ``I_A`` must point strictly into the half space
    ``<g_i', d> < 0``; a positive inner product beyond the threshold means
    the projection was wrong and raises :class:`InternalProjectionError`.
    """
    thresh = max(wis_rel_tol * float(np.linalg.norm(d)), abs_floor)
    working = []
    for i in I_A:
        ip = float(edge_grads[i] @ d)
        if abs(ip) <= thresh:
            working.append(i)
        elif ip > 0:
            raise InternalProjectionError(
                f"<g'_{i}, d> = {ip:.3e} > 0 contradicts the cone projection"
            )
    return tuple(working)


def with_working_set(bundle: DirectionBundle, wis_rel_tol: float = 1e-5,
                     abs_floor: float = 1e-12) -> DirectionBundle:
    """Fill in ``I_W`` and zero the multipliers of false active indices."""
    I_W = working_index_set(bundle.I_A, bundle.edge_grads, bundle.d, wis_rel_tol, abs_floor)
    mu = {i: (m if i in I_W else 0.0) for i, m in bundle.mu.items()}
    return DirectionBundle(
        u=bundle.u, grad=bundle.grad, d=bundle.d, d_norm=bundle.d_norm, I_A=bundle.I_A,
        I_W=I_W, mu=mu, lam=bundle.lam, proj=bundle.proj,
        edge_grads=bundle.edge_grads, eq_grads=bundle.eq_grads,
    )


def is_kkt(bundle: DirectionBundle, eps: float) -> bool:
    return bundle.d_norm < eps


def subspace_direction(problem: Problem, u: np.ndarray, I_A) -> np.ndarray:
    """Residual of ``-J'(u)`` after projecting onto the *span* of the active gradients.

    Unlike :func:`csdd` this can vanish at points that are not KKT, so it is
    only provided for comparison.
    """
    I_A = tuple(sorted(I_A))
    v = -problem.grad_J(u)
    basis, _, _ = _basis(problem, u, I_A)
    if basis.size == 0:
        return v
    coeffs = span_projection_coeffs(basis, v)
    return v - basis.matrix() @ coeffs


def reproject_on_working_face(problem: Problem, bundle: DirectionBundle) -> np.ndarray:
    """Recompute ``d`` using only the working-set edges (should equal ``bundle.d``)."""
    basis = ConeBasis(tuple(bundle.edge_grads[i] for i in bundle.I_W), bundle.eq_grads,
                      dim=problem.dim)
    return project_onto_cone(basis, -bundle.grad).residual
