"""Working set method for smooth constrained minimization.

The solver walks along a steepest descent direction that has been projected
off the cone of active constraint gradients, then pulls the trial point back
onto the working constraints with a Newton correction.

>>> from wsm import builtin, solve
>>> report = solve(builtin("rosenbrock-cubic"), [0.5, 1.5])
>>> report.status.value
'Converged'
"""

from wsm.cone import (
    ConeBasis,
    ProjectionResult,
    fuzz_projection,
    oracle_project_subset_enumeration,
    orthant_qp_minimize,
    project_onto_cone,
)
from wsm.core import (
    ConstraintFn,
    EvaluationError,
    Infeasible,
    InnerSolverStall,
    InternalProjectionError,
    Interior,
    InvalidBounds,
    IterateRecord,
    LicqFailure,
    NewtonStall,
    OnBoundary,
    Problem,
    ProblemNotFound,
    SolveReport,
    SolverConfig,
    Status,
    WSMError,
    check_feasibility,
)
from wsm.correction import correct, correction_basis, superlinearity_probe
from wsm.problems import builtin, builtin_names, load_problem, parse_problem
from wsm.solver import solve, transform_two_sided
from wsm.working_set import active_set, csdd, with_working_set

__all__ = [
    "ConeBasis", "ConstraintFn", "EvaluationError", "Infeasible", "InnerSolverStall",
    "InternalProjectionError", "Interior", "InvalidBounds", "IterateRecord", "LicqFailure",
    "NewtonStall", "OnBoundary", "Problem", "ProblemNotFound", "ProjectionResult",
    "SolveReport", "SolverConfig", "Status", "WSMError", "active_set", "builtin",
    "builtin_names", "check_feasibility", "correct", "correction_basis", "csdd",
    "fuzz_projection", "load_problem", "oracle_project_subset_enumeration",
    "orthant_qp_minimize", "parse_problem", "project_onto_cone", "solve",
    "superlinearity_probe", "transform_two_sided", "with_working_set",
]
