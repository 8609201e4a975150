"""A small arithmetic expression language and the problem-file reader.

Expressions use ``+ - * / ^``, unary minus, parentheses, ``sin``, ``cos``,
``exp``, the constants ``pi`` and ``e`` and variables ``x1 .. xn``.
``^`` binds tighter than unary minus and associates to the right, so
``-x1^2`` is ``-(x1^2)``. Exponents must reduce to a constant.

A problem file is line oriented::

    dim 2
    objective (1 - x1)^2 + 100*(x2 - x1^2)^2
    ineq (x1 - 1)^3 - x2 + 1
    ineq x1 + x2 - 2
    eq   <expr>
    start 0.5 1.5
    box -1.5 1.5 -0.5 2.5
    grad <expr>, <expr>

``ineq`` means ``expr <= 0``, ``eq`` means ``expr = 0``. ``start`` and
``box`` (one ``lo hi`` pair per variable) are optional. ``grad`` replaces
the automatic gradient of the preceding function with explicit
expressions; it exists mainly to build deliberately broken fixtures.
``#`` starts a comment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from wsm.core import ConstraintFn, EvaluationError, Problem
from wsm.problems import dual
from wsm.problems.dual import DualNumber


class ProblemSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Unary:
    op: str  # neg, sin, cos, exp
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # add, sub, mul, div, pow
    left: "Node"
    right: "Node"


Node = Union[Const, Var, Unary, Binary]
ExpressionAst = Node

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)
_FUNCS = {"sin", "cos", "exp"}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {"+": "add", "-": "sub", "*": "mul", "/": "div"}


def _tokenize(text: str, line: int, offset: int):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ProblemSyntaxError(f"unexpected character {text[pos]!r}", line, pos + 1 + offset)
        kind = m.lastgroup
        start = m.start(kind) + 1 + offset
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1 + offset))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int | None, line: int, offset: int):
        self.tokens = _tokenize(text, line, offset)
        self.i = 0
        self.dim = dim
        self.line = line

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ProblemSyntaxError(message, self.line, tok[2])

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}", tok)

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = _BINOPS[self.take()[1]]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = _BINOPS[self.take()[1]]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-":
            self.take()
            return Unary("neg", self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            tok = self.take()
            exponent = self.unary()
            if not _is_constant(exponent):
                raise self.error("exponent must be a constant", tok)
            return Binary("pow", base, Const(evaluate(exponent, np.zeros(0))))
        return base

    def atom(self) -> Node:
        tok = self.take()
        kind, text, col = tok
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            if text in _CONSTS:
                return Const(_CONSTS[text])
            m = re.fullmatch(r"x(\d+)", text)
            if m:
                k = int(m.group(1))
                if k < 1 or (self.dim is not None and k > self.dim):
                    raise self.error(f"undeclared variable {text}", tok)
                return Var(k)
            raise self.error(f"unknown name {text!r}", tok)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise self.error(f"unexpected {found}", tok)


def parse_expression(text: str, dim: int | None = None, line: int = 1, offset: int = 0) -> Node:
    """Parse one expression; ``offset`` shifts reported columns."""
    return _Parser(text, dim, line, offset).parse()


def _is_constant(node: Node) -> bool:
    if isinstance(node, Const):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Unary):
        return _is_constant(node.arg)
    return _is_constant(node.left) and _is_constant(node.right)


def is_affine(node: Node) -> bool:
    """Conservative syntactic check for affine expressions."""
    if isinstance(node, (Const, Var)):
        return True
    if isinstance(node, Unary):
        if node.op == "neg":
            return is_affine(node.arg)
        return _is_constant(node.arg)
    if node.op in ("add", "sub"):
        return is_affine(node.left) and is_affine(node.right)
    if node.op == "mul":
        return (_is_constant(node.left) and is_affine(node.right)) or (
            _is_constant(node.right) and is_affine(node.left))
    if node.op == "div":
        return is_affine(node.left) and _is_constant(node.right)
    if node.op == "pow":
        return _is_constant(node.left) or (is_affine(node.left) and node.right.value == 1.0)
    return False


def max_variable(node: Node) -> int:
    if isinstance(node, Const):
        return 0
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Unary):
        return max_variable(node.arg)
    return max(max_variable(node.left), max_variable(node.right))


_UNARY = {"sin": dual.sin, "cos": dual.cos, "exp": dual.exp}


def _walk(node: Node, xs):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return xs[node.index - 1]
    if isinstance(node, Unary):
        a = _walk(node.arg, xs)
        if node.op == "neg":
            return -a
        return _UNARY[node.op](a)
    a = _walk(node.left, xs)
    b = _walk(node.right, xs)
    if node.op == "add":
        return a + b
    if node.op == "sub":
        return a - b
    if node.op == "mul":
        return a * b
    if node.op == "div":
        if (b.value if isinstance(b, DualNumber) else b) == 0.0:
            raise ZeroDivisionError("division by zero")
        return a / b
    # pow with a constant exponent
    if isinstance(a, DualNumber):
        return a ** b
    p = int(b) if float(b).is_integer() else b
    if a == 0.0 and p < 0:
        raise ZeroDivisionError("0 raised to a negative power")
    if a < 0 and not isinstance(p, int):
        raise ValueError("negative base with non-integer exponent")
    return a ** p


def evaluate(node: Node, u) -> float:
    """Value of ``node`` at ``u``; domain errors become :class:`EvaluationError`."""
    xs = [float(v) for v in np.asarray(u, dtype=float).reshape(-1)]
    try:
        value = float(_walk(node, xs))
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise EvaluationError(str(exc)) from exc
    if not math.isfinite(value):
        raise EvaluationError("expression evaluated to a non-finite value")
    return value


def ad_gradient(node: Node, u) -> tuple[float, np.ndarray]:
    """Value and exact gradient of ``node`` at ``u`` by forward-mode AD."""
    u = np.asarray(u, dtype=float).reshape(-1)
    n = u.size
    xs = [DualNumber.variable(v, i, n) for i, v in enumerate(u)]
    try:
        out = _walk(node, xs)
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise EvaluationError(str(exc)) from exc
    if not isinstance(out, DualNumber):
        out = DualNumber.constant(out, n)
    if not (math.isfinite(out.value) and np.all(np.isfinite(out.derivative))):
        raise EvaluationError("non-finite value or derivative")
    return out.value, out.derivative.copy()


# -- problem files ---------------------------------------------------------


def _function(node: Node, label: int, text: str, grad_nodes=None) -> ConstraintFn:
    if grad_nodes is None:
        gradient = lambda u, node=node: ad_gradient(node, u)[1]  # noqa: E731
    else:
        gradient = lambda u, gs=tuple(grad_nodes): np.array([evaluate(g, u) for g in gs])  # noqa: E731
    return ConstraintFn(
        value=lambda u, node=node: evaluate(node, u),
        gradient=gradient, label=label, linear=is_affine(node) and grad_nodes is None,
        expr=text,
    )


def parse_problem(text: str, name: str = "file") -> Problem:
    """Build a :class:`Problem` from problem-file text."""
    dim = None
    entries = []  # [kind, node, text, grad_nodes]
    start = None
    box = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        parts = line.strip().split(None, 1)
        key = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        # 0-based column where the argument text starts
        rest_col = line.find(rest, indent + len(key)) if rest else len(line)
        if key == "dim":
            try:
                dim = int(rest)
            except ValueError:
                raise ProblemSyntaxError(f"invalid dimension {rest!r}", lineno, rest_col + 1) from None
            if dim < 1:
                raise ProblemSyntaxError("dimension must be positive", lineno, rest_col + 1)
            continue
        if dim is None:
            raise ProblemSyntaxError("'dim' must come first", lineno, indent + 1)
        if key in ("objective", "ineq", "eq"):
            if not rest.strip():
                raise ProblemSyntaxError(f"missing expression after {key!r}", lineno, rest_col + 1)
            node = parse_expression(rest, dim, lineno, rest_col)
            entries.append([key, node, rest.strip(), None])
        elif key == "grad":
            if not entries:
                raise ProblemSyntaxError("'grad' must follow a function line", lineno, indent + 1)
            pieces, nodes, col = rest.split(","), [], rest_col
            for piece in pieces:
                nodes.append(parse_expression(piece, dim, lineno, col))
                col += len(piece) + 1
            if len(nodes) != dim:
                raise ProblemSyntaxError(
                    f"gradient has {len(nodes)} components, expected {dim}", lineno, rest_col + 1)
            entries[-1][3] = nodes
        elif key in ("start", "box"):
            try:
                values = [float(v) for v in rest.split()]
            except ValueError:
                raise ProblemSyntaxError(f"invalid number in {key!r}", lineno, rest_col + 1) from None
            expected = dim if key == "start" else 2 * dim
            if len(values) != expected:
                raise ProblemSyntaxError(
                    f"{key!r} needs {expected} numbers, got {len(values)}", lineno, rest_col + 1)
            if key == "start":
                start = np.array(values)
            else:
                box = tuple((values[2 * i], values[2 * i + 1]) for i in range(dim))
        else:
            raise ProblemSyntaxError(f"unknown directive {key!r}", lineno, indent + 1)
    if dim is None:
        raise ProblemSyntaxError("missing 'dim' line", 1, 1)
    objectives = [e for e in entries if e[0] == "objective"]
    if len(objectives) != 1:
        raise ProblemSyntaxError(f"expected exactly one objective, found {len(objectives)}", 1, 1)
    obj = objectives[0]
    ineqs = [e for e in entries if e[0] == "ineq"]
    eqs = [e for e in entries if e[0] == "eq"]
    return Problem(
        dim=dim,
        objective=_function(obj[1], 0, obj[2], obj[3]),
        inequalities=tuple(_function(e[1], i + 1, e[2], e[3]) for i, e in enumerate(ineqs)),
        equalities=tuple(_function(e[1], j + 1, e[2], e[3]) for j, e in enumerate(eqs)),
        name=name, start=start, box=box,
    )


def load_problem(path) -> Problem:
    from pathlib import Path

    p = Path(path)
    return parse_problem(p.read_text(encoding="utf-8"), name=p.stem)
