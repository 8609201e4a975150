"""Command-line harness for the working set solver.

Subcommands::

    wsm list
    wsm solve --problem NAME | --file PATH [--start a,b,...] [--trace out.csv]
    wsm gradcheck --problem NAME | --file PATH
    wsm validate --problem NAME | --file PATH [--start a,b,...]
    wsm fuzz-projection [--count N] [--max-dim D] [--max-edges E] [--seed S]

Exit codes: 0 success, 2 solver or check failure (max iterations, stall,
LICQ failure, gradient mismatch, fuzz mismatch), 3 infeasible start,
4 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from wsm.cone import fuzz_projection
from wsm.core import (
    EvaluationError,
    Infeasible,
    IterateRecord,
    OnBoundary,
    Problem,
    ProblemNotFound,
    SolveReport,
    SolverConfig,
    Status,
    check_feasibility,
    gradient_error,
)
from wsm.problems import builtin, builtin_names, load_problem
from wsm.problems.expr import ProblemSyntaxError
from wsm.solver import solve

EXIT_OK = 0
EXIT_FAILURE = 2
EXIT_INFEASIBLE = 3
EXIT_USAGE = 4

GRADCHECK_SAMPLES = 100
GRADCHECK_TOL = 1e-6
GRADCHECK_SEED = 0
FUZZ_TOL = 1e-6
MAX_FUZZ_EDGES = 20


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad arguments; usage errors here map to 4."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- trace CSV ---------------------------------------------------------------

def trace_header(dim: int) -> list[str]:
    return ["k", "J", "d_norm", "t", "I_A", "I_W"] + [f"x{i + 1}" for i in range(dim)]


def _fmt_float(x) -> str:
    return "" if x is None else repr(float(x))


def _fmt_set(s) -> str:
    return ";".join(str(i) for i in sorted(s))


def write_trace(records: Sequence[IterateRecord], dim: int, stream) -> None:
    """Write ``records`` as CSV; floats use the shortest round-trip repr."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(trace_header(dim))
    for r in records:
        w.writerow([str(r.k), _fmt_float(r.J), _fmt_float(r.d_norm), _fmt_float(r.t),
                    _fmt_set(r.I_A), _fmt_set(r.I_W)] + [_fmt_float(x) for x in r.u])


def read_trace(stream) -> list[IterateRecord]:
    """Parse a trace written by :func:`write_trace` (corrections are not stored)."""
    rows = list(csv.reader(stream))
    if not rows:
        raise ValueError("empty trace")
    header = rows[0]
    if header[:6] != ["k", "J", "d_norm", "t", "I_A", "I_W"]:
        raise ValueError(f"unexpected trace header {header}")
    dim = len(header) - 6
    if header != trace_header(dim):
        raise ValueError(f"unexpected trace header {header}")

    def ints(field):
        return tuple(int(x) for x in field.split(";")) if field else ()

    out = []
    for row in rows[1:]:
        out.append(IterateRecord(
            k=int(row[0]), J=float(row[1]), d_norm=float(row[2]),
            t=float(row[3]) if row[3] else None,
            I_A=ints(row[4]), I_W=ints(row[5]),
            u=np.array([float(x) for x in row[6:]]),
        ))
    return out


# -- helpers -----------------------------------------------------------------

def _parse_start(text: str | None, dim: int) -> np.ndarray | None:
    if text is None:
        return None
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--start must be comma-separated numbers, got {text!r}") from None
    if len(vals) != dim:
        raise UsageError(f"--start has {len(vals)} components but the problem has dim {dim}")
    return np.array(vals)


def _resolve_problem(args) -> Problem:
    if args.problem is not None:
        try:
            return builtin(args.problem)
        except ProblemNotFound as exc:
            raise UsageError(str(exc)) from None
    try:
        return load_problem(args.file)
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc}") from None
    except ProblemSyntaxError as exc:
        raise UsageError(f"{args.file}:{exc}") from None


def _start_point(args, problem: Problem) -> np.ndarray:
    start = _parse_start(args.start, problem.dim)
    if start is None:
        if problem.start is None:
            raise UsageError("problem has no default start; pass --start")
        start = np.asarray(problem.start, dtype=float)
    return start


def _add_selector(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--problem", help="builtin problem name (see `list`)")
    group.add_argument("--file", help="path to a problem file")


def _vec4(u) -> str:
    return "(" + ", ".join(f"{x:.4f}" for x in u) + ")"


def _set_str(s) -> str:
    return "{" + ",".join(str(i) for i in s) + "}" if s else "{}"


def format_summary(problem: Problem, report: SolveReport) -> str:
    """Human-readable summary; values rounded to four decimals."""
    lines = [
        f"problem   {problem.name}",
        f"status    {report.status.value}",
        f"k_final   {report.iterations}",
        f"u_final   {_vec4(report.final_u)}",
        f"J_final   {report.final_J:.4f}",
        f"d_final   {report.final_d_norm:.4e}",
    ]
    if report.message:
        lines.append(f"message   {report.message}")
    if report.trace:
        lines.append("")
        lines.append("active/working set changes")
        lines.append(f"{'k':>6}  {'u':<24} {'J':>12}  I_A / I_W")
        prev = None
        last = len(report.trace) - 1
        for n, r in enumerate(report.trace):
            key = (r.I_A, r.I_W)
            if key != prev or n == last:
                lines.append(f"{r.k:>6}  {_vec4(r.u):<24} {r.J:>12.4f}  "
                             f"{_set_str(r.I_A)} / {_set_str(r.I_W)}")
            prev = key
    return "\n".join(lines)


def summary_json(problem: Problem, report: SolveReport) -> dict:
    return {
        "problem": problem.name,
        "status": report.status.value,
        "k_final": report.iterations,
        "u_final": [float(x) for x in report.final_u],
        "J_final": float(report.final_J),
        "d_norm_final": float(report.final_d_norm),
        "mu": {str(k): v for k, v in report.multipliers_mu.items()},
        "lambda": {str(k): v for k, v in report.multipliers_lambda.items()},
        "message": report.message,
        "sets": [{"k": r.k, "I_A": list(r.I_A), "I_W": list(r.I_W)} for r in report.trace],
    }


# -- subcommands -------------------------------------------------------------

def cmd_list(args, out, err) -> int:
    for name in builtin_names():
        p = builtin(name)
        start = "-" if p.start is None else ",".join(repr(float(x)) for x in p.start)
        print(f"{name:<20} dim={p.dim} ineq={len(p.inequalities)} "
              f"eq={len(p.equalities)} start={start}", file=out)
    return EXIT_OK


def cmd_solve(args, out, err) -> int:
    problem = _resolve_problem(args)
    start = _start_point(args, problem)
    cfg = SolverConfig()
    overrides = {}
    if args.eps is not None:
        overrides["eps"] = args.eps
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.max_iter is not None:
        overrides["max_outer_iter"] = args.max_iter
    if args.normalize:
        overrides["normalize_direction"] = True
    try:
        cfg = replace(cfg, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    report = solve(problem, start, cfg)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            write_trace(report.trace, problem.dim, fh)
    if args.format == "json":
        print(json.dumps(summary_json(problem, report), indent=2), file=out)
    else:
        print(format_summary(problem, report), file=out)

    if report.status is Status.CONVERGED:
        return EXIT_OK
    if report.status is Status.INFEASIBLE_START:
        print(f"infeasible start: {report.message}", file=err)
        return EXIT_INFEASIBLE
    print(f"solver stopped: {report.status.value} {report.message}".rstrip(), file=err)
    return EXIT_FAILURE


def gradcheck(problem: Problem, samples: int = GRADCHECK_SAMPLES, seed: int = GRADCHECK_SEED):
    """Max relative gradient error per evaluator over uniform samples in the box.

    Returns ``(rows, failure)`` where rows are ``(label, max_error)`` and
    ``failure`` is a message if any evaluation failed.
    """
    rng = np.random.default_rng(seed)
    box = np.array(problem.sample_box(), dtype=float)
    points = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((samples, problem.dim))
    fns = [("J", problem.objective)]
    fns += [(f"g{c.label}", c) for c in problem.inequalities]
    fns += [(f"h{c.label}", c) for c in problem.equalities]
    rows = []
    for label, fn in fns:
        worst = 0.0
        for u in points:
            try:
                worst = max(worst, gradient_error(fn.value, fn.gradient, u))
            except (EvaluationError, ArithmeticError, ValueError) as exc:
                return rows, f"{label} failed at {_vec4(u)}: {exc}"
        rows.append((label, worst))
    return rows, None


def cmd_gradcheck(args, out, err) -> int:
    problem = _resolve_problem(args)
    rows, failure = gradcheck(problem)
    ok = failure is None
    for label, e in rows:
        flag = "ok" if e <= GRADCHECK_TOL else "FAIL"
        ok = ok and e <= GRADCHECK_TOL
        print(f"{label:<6} max_rel_err={e:.3e} {flag}", file=out)
    if failure:
        print(failure, file=err)
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_validate(args, out, err) -> int:
    problem = _resolve_problem(args)
    start = _start_point(args, problem)
    try:
        verdict = check_feasibility(problem, start)
    except EvaluationError as exc:
        print(f"evaluation failed: {exc}", file=err)
        return EXIT_INFEASIBLE
    if isinstance(verdict, Infeasible):
        for kind, idx, val in verdict.violations:
            print(f"violated {kind} {idx}: {val:.6g}", file=out)
        print("infeasible", file=out)
        return EXIT_INFEASIBLE
    if isinstance(verdict, OnBoundary):
        print(f"on boundary, active {_set_str(verdict.active)}", file=out)
    else:
        print("interior", file=out)
    return EXIT_OK


def cmd_fuzz(args, out, err) -> int:
    if args.max_edges > MAX_FUZZ_EDGES:
        raise UsageError(f"--max-edges must be at most {MAX_FUZZ_EDGES}")
    if args.count < 0 or args.max_dim < 1 or args.max_edges < 0:
        raise UsageError("--count and --max-edges must be nonnegative, --max-dim positive")
    rep = fuzz_projection(args.count, max_dim=args.max_dim, max_edges=args.max_edges,
                          seed=args.seed, tol=FUZZ_TOL)
    print(f"instances={rep.count} regenerated={rep.regenerated} "
          f"max_point_err={rep.max_point_err:.3e} max_coef_err={rep.max_coef_err:.3e}", file=out)
    if rep.passed:
        print("PASS", file=out)
        return EXIT_OK
    print(f"FAIL ({len(rep.failures)} instances above {FUZZ_TOL:g})", file=out)
    return EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wsm", description="Working set method benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list", help="list builtin problems")

    p = sub.add_parser("solve", help="solve a problem from a feasible start")
    _add_selector(p)
    p.add_argument("--start", help="comma-separated start point")
    p.add_argument("--eps", type=float, help="KKT tolerance on |d|")
    p.add_argument("--tau", type=float, help="initial trial stepsize")
    p.add_argument("--max-iter", type=int, help="outer iteration cap")
    p.add_argument("--normalize", action="store_true", help="scale d by max(1, |d|)")
    p.add_argument("--trace", help="write the iterate trace CSV here")
    p.add_argument("--format", choices=("table", "json"), default="table")

    p = sub.add_parser("gradcheck", help="compare gradients with finite differences")
    _add_selector(p)

    p = sub.add_parser("validate", help="report feasibility of the start point")
    _add_selector(p)
    p.add_argument("--start", help="comma-separated point (default: problem start)")

    p = sub.add_parser("fuzz-projection", help="cone projection vs enumeration oracle")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--max-dim", type=int, default=6)
    p.add_argument("--max-edges", type=int, default=6)
    p.add_argument("--seed", type=int, default=42)
    return parser


_COMMANDS = {
    "list": cmd_list,
    "solve": cmd_solve,
    "gradcheck": cmd_gradcheck,
    "validate": cmd_validate,
    "fuzz-projection": cmd_fuzz,
}


def _join_start(argv: list[str]) -> list[str]:
    """Glue ``--start -1,-1`` into ``--start=-1,-1`` so argparse accepts negatives."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--start" and i + 1 < len(argv):
            out.append(f"--start={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(_join_start(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        print(f"wsm: error: {exc}", file=err)
        return EXIT_USAGE


def run(argv: Sequence[str]) -> tuple[int, str, str]:
    """Invoke :func:`main` capturing output; convenient in tests."""
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


if __name__ == "__main__":
    sys.exit(main())
