from wsm.problems.dual import DualNumber
from wsm.problems.expr import (
    ProblemSyntaxError,
    ad_gradient,
    evaluate,
    load_problem,
    parse_expression,
    parse_problem,
)
from wsm.problems.registry import (
    BUILTINS,
    REFERENCE_OPTIMA,
    builtin,
    builtin_names,
    cone_quadratic,
    orthant_quadratic,
    problem_file_text,
)

__all__ = [
    "BUILTINS", "DualNumber", "ProblemSyntaxError", "REFERENCE_OPTIMA", "ad_gradient",
    "builtin", "builtin_names", "cone_quadratic", "evaluate", "load_problem",
    "orthant_quadratic", "parse_expression", "parse_problem", "problem_file_text",
]
