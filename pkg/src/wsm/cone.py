"""Projection onto a finitely generated cone (optionally plus a subspace).

The projection of ``v`` onto ``cone(edges) + span(free)`` is computed in
two stages. First ``v`` is projected onto the span of all generators,
which has a closed form through the Gram matrix ``G``. Then the
coefficients are pulled into the nonnegative orthant by minimizing
``1/2 (x - xbar)^T G (x - xbar)`` over ``x_edges >= 0`` with a truncated
gradient iteration.

:func:`oracle_project_subset_enumeration` enumerates faces instead and is
meant for testing only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from wsm.core import EvaluationError, InnerSolverStall, LicqFailure

ZERO_COORD = 1e-12
LICQ_RCOND = 1e-12


@dataclass(frozen=True)
class ConeBasis:
    """Generators of ``cone(edges) (+) span(free)``.

    With ``check=True`` (the default) the concatenated generators must be
    numerically independent, otherwise :class:`LicqFailure` is raised.
    """

    edges: tuple[np.ndarray, ...] = ()
    free: tuple[np.ndarray, ...] = ()
    dim: int | None = None
    check: bool = True

    def __post_init__(self):
        edges = tuple(np.asarray(e, dtype=float).reshape(-1) for e in self.edges)
        free = tuple(np.asarray(f, dtype=float).reshape(-1) for f in self.free)
        dims = {v.size for v in edges + free}
        if self.dim is not None:
            dims.add(self.dim)
        if len(dims) > 1:
            raise ValueError(f"basis vectors have mismatched dimensions {sorted(dims)}")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "free", free)
        if self.dim is None and dims:
            object.__setattr__(self, "dim", dims.pop())
        if self.check and self.size:
            gram_matrix(self)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def size(self) -> int:
        return len(self.edges) + len(self.free)

    def matrix(self) -> np.ndarray:
        """Generators as columns, edges first."""
        vecs = self.edges + self.free
        if not vecs:
            return np.zeros((self.dim or 0, 0))
        return np.column_stack(vecs)


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    residual: np.ndarray
    iterations: int = 0

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.mu, self.lam])


def gram_matrix(basis: ConeBasis, rcond: float = LICQ_RCOND) -> np.ndarray:
    """Pairwise inner products of ``edges ++ free``; raises on near-singularity."""
    if basis.size == 0:
        raise ValueError("gram matrix of an empty basis")
    B = basis.matrix()
    G = B.T @ B
    G = 0.5 * (G + G.T)
    _check_spd(G, rcond)
    return G


def _check_spd(G: np.ndarray, rcond: float) -> None:
    if not np.all(np.isfinite(G)):
        raise EvaluationError("non-finite entries in Gram matrix")
    w = np.linalg.eigvalsh(G)
    if w[-1] <= 0 or w[0] <= rcond * w[-1]:
        raise LicqFailure(
            f"generators are numerically dependent (eigenvalues {w[0]:.3e}..{w[-1]:.3e})"
        )


def span_projection_coeffs(basis: ConeBasis, v: np.ndarray, G: np.ndarray | None = None) -> np.ndarray:
    """Coefficients of the orthogonal projection of ``v`` onto ``span(basis)``."""
    if G is None:
        G = gram_matrix(basis)
    b = basis.matrix().T @ np.asarray(v, dtype=float)
    try:
        return np.linalg.solve(G, b)
    except np.linalg.LinAlgError as exc:
        raise LicqFailure(str(exc)) from exc


def truncate_P(v: np.ndarray, zero_set) -> np.ndarray:
    """Zero the components ``i`` in ``zero_set`` (0-based) where ``v_i < 0``."""
    out = np.array(v, dtype=float, copy=True)
    for i in zero_set:
        if out[i] < 0:
            out[i] = 0.0
    return out


@dataclass
class OrthantStep:
    J_before: float
    J_after: float
    alpha: float
    p_sq: float
    kind: str  # "gradient" or "face"


def orthant_qp_minimize(
    G: np.ndarray,
    xbar: np.ndarray,
    x0: np.ndarray | None = None,
    *,
    n_signed: int | None = None,
    inner_eps: float = 1e-10,
    max_iter: int = 10000,
    step_constant: float = 1.5,
    cap_at_line_minimum: bool = True,
    face_steps: bool = True,
    history: list | None = None,
) -> np.ndarray:
    """Minimize ``1/2 (x - xbar)^T G (x - xbar)`` subject to ``x[:n_signed] >= 0``.

    Each iteration moves along the truncated negative gradient
    ``p = [-G(x - xbar)]^P`` with stepsize

        alpha = min(step_constant * |p|^2 / p^T G p,  max feasible step),

    which guarantees ``J(x + alpha p) - J(x) <= -(alpha/4) |p|^2`` for
    ``step_constant <= 3/2``. When ``cap_at_line_minimum`` is set, alpha is
    also capped at the exact line minimizer ``|p|^2 / p^T G p``.

    With ``face_steps`` each gradient step is followed by an exact
    minimization over the current face (coordinates at zero held fixed),
    truncated at the orthant boundary. This keeps the objective
    nonincreasing and makes the iteration terminate after finitely many
    face changes in practice.

    Iteration stops when ``|p| <= inner_eps * max(1, |G xbar|)``.
    """
    G = np.asarray(G, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    n = xbar.size
    if n_signed is None:
        n_signed = n
    if x0 is None:
        x0 = np.zeros(n)
        x0[n_signed:] = xbar[n_signed:]
    shift = 0.5 * float(xbar @ G @ xbar)
    if history is not None:
        raw: list[OrthantStep] = []
    else:
        raw = None
    x = _orthant_core(G, G @ xbar, x0, n_signed, inner_eps, max_iter, step_constant,
                      cap_at_line_minimum, face_steps, raw)
    if history is not None:
        for s in raw:
            history.append(OrthantStep(s.J_before + shift, s.J_after + shift, s.alpha, s.p_sq, s.kind))
    return x


def _orthant_core(G, b, x0, n_signed, inner_eps, max_iter, step_constant,
                  cap_at_line_minimum, face_steps, history):
    """Minimize ``1/2 x^T G x - b^T x`` over ``x[:n_signed] >= 0`` (``G`` may be singular)."""
    n = b.size
    x = np.array(x0, dtype=float, copy=True)
    if np.any(x[:n_signed] < 0):
        raise ValueError("x0 must be nonnegative on the sign-constrained coordinates")
    if n == 0:
        return x
    tol = inner_eps * max(1.0, float(np.linalg.norm(b)))

    def obj(z):
        return 0.5 * float(z @ G @ z) - float(b @ z)

    for _ in range(max_iter):
        zero_set = [i for i in range(n_signed) if x[i] <= ZERO_COORD]
        p = truncate_P(b - G @ x, zero_set)
        if not np.all(np.isfinite(p)):
            raise EvaluationError("non-finite values in orthant iteration")
        p_norm = float(np.linalg.norm(p))
        if p_norm <= tol:
            return x
        p_sq = p_norm * p_norm
        pGp = float(p @ G @ p)
        if pGp <= 0:
            # flat direction of a singular G: p lies in its null space
            return x
        line_min = p_sq / pGp
        alpha = step_constant * line_min
        if cap_at_line_minimum:
            alpha = min(alpha, line_min)
        blocking = None
        for i in range(n_signed):
            if p[i] < 0:
                cap = x[i] / -p[i]
                if cap < alpha:
                    alpha, blocking = cap, i
        J_before = obj(x)
        x = x + alpha * p
        x[:n_signed] = np.maximum(x[:n_signed], 0.0)
        if blocking is not None:
            x[blocking] = 0.0
        if history is not None:
            history.append(OrthantStep(J_before, obj(x), alpha, p_sq, "gradient"))
        if face_steps:
            x = _face_step(G, b, x, n_signed, obj, history)
    raise InnerSolverStall(f"orthant iteration did not converge in {max_iter} steps")


def _face_step(G, b, x, n_signed, obj, history):
    free = np.ones(x.size, dtype=bool)
    free[:n_signed] = x[:n_signed] > ZERO_COORD
    if not free.any():
        return x
    F = np.flatnonzero(free)
    fixed = np.flatnonzero(~free)
    # minimize over free coordinates with the others fixed
    rhs = b[F] - G[np.ix_(F, fixed)] @ x[fixed]
    target_F = np.linalg.lstsq(G[np.ix_(F, F)], rhs, rcond=None)[0]
    step = target_F - x[F]
    theta = 1.0
    for local, i in enumerate(F):
        if i < n_signed and step[local] < 0:
            theta = min(theta, x[i] / -step[local])
    cand = x.copy()
    cand[F] = x[F] + theta * step
    cand[:n_signed] = np.maximum(cand[:n_signed], 0.0)
    J_before, J_after = obj(x), obj(cand)
    if J_after > J_before:
        return x
    if history is not None:
        history.append(OrthantStep(J_before, J_after, theta, 0.0, "face"))
    return cand


def project_onto_cone(
    basis: ConeBasis,
    v: np.ndarray,
    *,
    inner_eps: float = 1e-10,
    max_iter: int = 10000,
    step_constant: float = 1.5,
    face_steps: bool = True,
    allow_dependent: bool = False,
) -> ProjectionResult:
    """Project ``v`` onto ``cone(basis.edges) (+) span(basis.free)``.

    An empty basis projects everything to the origin. With
    ``allow_dependent`` a singular Gram matrix is tolerated: the
    coefficients are then found directly from ``min 1/2 |B x - v|^2`` and
    are one of possibly many valid representations of the (unique) point.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    m, q = basis.n_edges, len(basis.free)
    if basis.size == 0:
        return ProjectionResult(np.zeros_like(v), np.zeros(0), np.zeros(0), v.copy())
    if basis.dim != v.size:
        raise ValueError(f"vector of length {v.size} does not match basis dimension {basis.dim}")
    steps: list[OrthantStep] = []
    try:
        G = gram_matrix(basis)
    except LicqFailure:
        if not allow_dependent:
            raise
        B = basis.matrix()
        x0 = np.zeros(m + q)
        if q:
            x0[m:] = np.linalg.lstsq(B[:, m:], v, rcond=None)[0]
        x = _orthant_core(B.T @ B, B.T @ v, x0, m, inner_eps, max_iter, step_constant,
                          True, face_steps, steps)
    else:
        xbar = span_projection_coeffs(basis, v, G)
        x0 = np.zeros(m + q)
        x0[m:] = xbar[m:]
        x = orthant_qp_minimize(
            G, xbar, x0, n_signed=m, inner_eps=inner_eps, max_iter=max_iter,
            step_constant=step_constant, face_steps=face_steps, history=steps,
        )
    mu = x[:m].copy()
    mu[mu <= ZERO_COORD] = 0.0
    lam = x[m:].copy()
    point = basis.matrix() @ np.concatenate([mu, lam])
    return ProjectionResult(point, mu, lam, v - point, iterations=len(steps))


def oracle_project_subset_enumeration(basis: ConeBasis, v: np.ndarray, tol: float = 1e-9) -> ProjectionResult:
    """Exact cone projection by enumerating candidate faces.

    For each subset ``S`` of edges the least-squares projection onto
    ``span(S + free)`` is formed; the subset is accepted when its edge
    coefficients are nonnegative and the residual makes a nonpositive
    inner product with every excluded edge. Among accepted subsets the one
    with the smallest residual wins (they coincide up to rounding).
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    m = basis.n_edges
    if m > 20:
        raise ValueError("subset enumeration is limited to 20 edges")
    if basis.size == 0:
        return ProjectionResult(np.zeros_like(v), np.zeros(0), np.zeros(0), v.copy())
    scale = max(1.0, float(np.linalg.norm(v)))
    best = None
    for r in range(m + 1):
        for S in itertools.combinations(range(m), r):
            vecs = [basis.edges[i] for i in S] + list(basis.free)
            if vecs:
                B = np.column_stack(vecs)
                G = B.T @ B
                try:
                    _check_spd(G, LICQ_RCOND)
                except LicqFailure:
                    continue
                coef = np.linalg.solve(G, B.T @ v)
                point = B @ coef
            else:
                coef = np.zeros(0)
                point = np.zeros_like(v)
            if np.any(coef[: len(S)] < -tol * scale):
                continue
            res = v - point
            excluded = [i for i in range(m) if i not in S]
            if any(float(res @ basis.edges[i]) > tol * scale * max(1.0, np.linalg.norm(basis.edges[i]))
                   for i in excluded):
                continue
            rn = float(np.linalg.norm(res))
            if best is None or rn < best[0] - 1e-15:
                mu = np.zeros(m)
                mu[list(S)] = np.maximum(coef[: len(S)], 0.0)
                lam = coef[len(S):].copy()
                best = (rn, ProjectionResult(point, mu, lam, res))
    if best is None:
        raise LicqFailure("no face satisfies the projection conditions")
    return best[1]


def random_basis(rng: np.random.Generator, dim: int, n_edges: int, n_free: int = 0) -> ConeBasis:
    """Draw a random basis (used by the fuzz harness and tests)."""
    edges = [rng.standard_normal(dim) for _ in range(n_edges)]
    free = [rng.standard_normal(dim) for _ in range(n_free)]
    return ConeBasis(tuple(edges), tuple(free), dim=dim)


@dataclass
class FuzzReport:
    count: int
    max_point_err: float = 0.0
    max_coef_err: float = 0.0
    regenerated: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def fuzz_instances(count: int, max_dim: int = 6, max_edges: int = 6, seed: int = 0,
                   max_free: int = 2, stats: FuzzReport | None = None):
    """Yield ``count`` seeded ``(basis, v)`` pairs with independent generators.

    Draws whose generators are numerically dependent are discarded and
    redrawn; they are tallied in ``stats.regenerated`` when given.
    """
    if max_edges > 20:
        raise ValueError("max_edges must not exceed 20")
    if max_dim < 1:
        raise ValueError("max_dim must be positive")
    rng = np.random.default_rng(seed)
    done = 0
    while done < count:
        dim = int(rng.integers(1, max_dim + 1))
        n_free = int(rng.integers(0, min(max_free, dim) + 1))
        n_edges = int(rng.integers(0, min(max_edges, dim - n_free) + 1))
        try:
            basis = random_basis(rng, dim, n_edges, n_free)
        except LicqFailure:
            if stats is not None:
                stats.regenerated += 1
            continue
        v = rng.standard_normal(dim) * rng.choice([0.1, 1.0, 10.0])
        yield basis, v
        done += 1


def fuzz_projection(count: int, max_dim: int = 6, max_edges: int = 6, seed: int = 0,
                    max_free: int = 2, tol: float = 1e-6) -> FuzzReport:
    """Compare :func:`project_onto_cone` against the enumeration oracle on random draws."""
    report = FuzzReport(count)
    for n, (basis, v) in enumerate(fuzz_instances(count, max_dim, max_edges, seed, max_free, report)):
        fast = project_onto_cone(basis, v)
        exact = oracle_project_subset_enumeration(basis, v)
        perr = float(np.linalg.norm(fast.point - exact.point))
        cerr = float(np.max(np.abs(fast.coefficients - exact.coefficients), initial=0.0))
        report.max_point_err = max(report.max_point_err, perr)
        report.max_coef_err = max(report.max_coef_err, cerr)
        if perr > tol:
            report.failures.append((n, perr))
    return report


def as_basis(edges: Sequence, free: Sequence = (), dim: int | None = None) -> ConeBasis:
    return ConeBasis(tuple(edges), tuple(free), dim=dim)
