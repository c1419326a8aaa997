"""A small expression language for coefficient functions and domain predicates.

Grammar, loosest binding first::

    or  <  and  <  not  <  comparison  <  + -  <  * /  <  unary -  <  ^

``^`` is right associative and binds tighter than unary minus, so ``-2^2``
is ``-4``. Variables are ``x1`` .. ``x9``. Evaluation is vectorized: a point
may be a single vector of length d or an (M, d) array of points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

SCALAR = "scalar"
PREDICATE = "predicate"

FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "abs": 1,
    "sqrt": 1,
    "min": 2,
    "max": 2,
}

COMPARISONS = ("<", "<=", ">", ">=")


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class ExprTypeError(ExprError):
    pass


class ExprEvalError(ExprError):
    pass


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call, Compare, BoolOp, Not]


# --- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|\*\*|[-+*/^<>(),!])
  | (?P<bad>.)
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(src):
        kind = m.lastgroup
        text = m.group()
        col = m.start() - line_start + 1
        if kind == "ws":
            nl = text.count("\n")
            if nl:
                line += nl
                line_start = m.start() + text.rfind("\n") + 1
            continue
        if kind == "bad":
            raise ExprSyntaxError(f"unexpected character {text!r}", line, col)
        if text == "**":
            text = "^"
        tokens.append(_Token(kind, text, line, col))
    end_col = len(src) - line_start + 1
    tokens.append(_Token("eof", "", line, end_col))
    return tokens


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: _Token | None = None) -> ExprSyntaxError:
        tok = tok or self.tok
        return ExprSyntaxError(message, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Expr:
        node = self.parse_or()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected token {self.tok.text!r}")
        return node

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.accept("or"):
            left = BoolOp("or", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.accept("and"):
            left = BoolOp("and", left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.accept("not") or self.accept("!"):
            return Not(self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        if self.tok.kind == "op" and self.tok.text in COMPARISONS:
            op = self.tok.text
            self.pos += 1
            right = self.parse_additive()
            if self.tok.kind == "op" and self.tok.text in COMPARISONS:
                raise self.error("chained comparisons are not allowed")
            return Compare(op, left, right)
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_term()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.pos += 1
            left = BinOp(op, left, self.parse_term())
        return left

    def parse_term(self) -> Expr:
        left = self.parse_unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.tok.text
            self.pos += 1
            left = BinOp(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.parse_unary())
        if self.accept("+"):
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_primary()
        if self.accept("^"):
            # right operand may carry its own sign: 2^-1
            return BinOp("^", base, self.parse_unary())
        return base

    def parse_primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.pos += 1
            return Num(float(tok.text))
        if tok.kind == "name":
            name = tok.text
            m = re.fullmatch(r"x([1-9])", name)
            if m:
                self.pos += 1
                return Var(int(m.group(1)))
            if name in FUNCTIONS:
                self.pos += 1
                self.expect("(")
                args = [self.parse_or()]
                while self.accept(","):
                    args.append(self.parse_or())
                self.expect(")")
                if len(args) != FUNCTIONS[name]:
                    raise self.error(
                        f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}", tok
                    )
                return Call(name, tuple(args))
            if name in ("and", "or", "not"):
                raise self.error(f"unexpected keyword {name!r}")
            raise self.error(f"unknown name {name!r}")
        if self.accept("("):
            node = self.parse_or()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def _infer(node: Expr) -> str:
    """Return 'num' or 'bool', raising ExprTypeError on mixing."""
    if isinstance(node, (Num, Var)):
        return "num"
    if isinstance(node, Neg):
        _want(node.operand, "num", "unary minus")
        return "num"
    if isinstance(node, BinOp):
        _want(node.left, "num", node.op)
        _want(node.right, "num", node.op)
        return "num"
    if isinstance(node, Call):
        for a in node.args:
            _want(a, "num", node.name)
        return "num"
    if isinstance(node, Compare):
        _want(node.left, "num", node.op)
        _want(node.right, "num", node.op)
        return "bool"
    if isinstance(node, BoolOp):
        _want(node.left, "bool", node.op)
        _want(node.right, "bool", node.op)
        return "bool"
    if isinstance(node, Not):
        _want(node.operand, "bool", "not")
        return "bool"
    raise TypeError(f"not an expression node: {node!r}")


def _want(node: Expr, kind: str, where: str) -> None:
    got = _infer(node)
    if got != kind:
        what = "numeric" if kind == "num" else "boolean"
        raise ExprTypeError(f"operand of {where!r} must be {what}")


def parse(src: str, context: str = SCALAR) -> Expr:
    """Parse ``src`` in scalar or predicate context."""
    if context not in (SCALAR, PREDICATE):
        raise ValueError(f"unknown context {context!r}")
    node = _Parser(src).parse()
    kind = _infer(node)
    if context == SCALAR and kind != "num":
        raise ExprTypeError("boolean expression used where a scalar is required")
    if context == PREDICATE and kind != "bool":
        raise ExprTypeError("predicate context requires a boolean expression")
    return node


def max_variable(node: Expr) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Num):
        return 0
    if isinstance(node, (Neg, Not)):
        return max_variable(node.operand)
    if isinstance(node, Call):
        return max(max_variable(a) for a in node.args)
    return max(max_variable(node.left), max_variable(node.right))


# --- printer ---------------------------------------------------------------

_PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "+": 5, "-": 5, "*": 6, "/": 6, "neg": 7, "^": 8}


def _prec(node: Expr) -> int:
    if isinstance(node, BoolOp):
        return _PREC[node.op]
    if isinstance(node, Not):
        return _PREC["not"]
    if isinstance(node, Compare):
        return _PREC["cmp"]
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return 10


def to_source(node: Expr) -> str:
    """Render ``node`` so that ``parse(to_source(node))`` rebuilds it exactly."""
    if isinstance(node, Num):
        if node.value < 0 or not math.isfinite(node.value):
            raise ValueError("numeric literals must be finite and non-negative")
        return repr(float(node.value))
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        # operand of unary minus parses at unary level, which admits ^ chains
        if _prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Not):
        inner = to_source(node.operand)
        if _prec(node.operand) < _PREC["not"]:
            inner = f"({inner})"
        return f"not {inner}"
    p = _prec(node)
    left, right = to_source(node.left), to_source(node.right)
    if isinstance(node, BinOp) and node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _PREC["neg"]:
            right = f"({right})"
        return f"{left}^{right}"
    if isinstance(node, Compare):
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    # left-associative binary operators
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# --- evaluation ------------------------------------------------------------


def evaluate(node: Expr, point) -> np.ndarray | float | bool:
    """Evaluate at one point (length-d vector) or at an (M, d) array of points.

    Raises ExprEvalError on unbound variables, division by zero and sqrt of
    negative numbers.
    """
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise ValueError("point must be a vector or an (M, d) array")
    need = max_variable(node)
    if need > pts.shape[1]:
        raise ExprEvalError(f"unbound variable x{need} for a {pts.shape[1]}-dimensional point")
    with np.errstate(all="ignore"):
        out = _eval(node, pts)
    out = np.broadcast_to(out, (pts.shape[0],))
    if single:
        v = out[0]
        return bool(v) if out.dtype == bool else float(v)
    return np.array(out)


def _eval(node: Expr, pts: np.ndarray):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return pts[:, node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.operand, pts)
    if isinstance(node, BinOp):
        a, b = _eval(node.left, pts), _eval(node.right, pts)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(np.asarray(b) == 0):
                raise ExprEvalError("division by zero")
            return a / b
        return np.power(a, b)
    if isinstance(node, Call):
        args = [_eval(a, pts) for a in node.args]
        if node.name == "sqrt":
            if np.any(np.asarray(args[0]) < 0):
                raise ExprEvalError("sqrt of a negative number")
            return np.sqrt(args[0])
        if node.name == "min":
            return np.minimum(*args)
        if node.name == "max":
            return np.maximum(*args)
        return {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}[node.name](args[0])
    if isinstance(node, Compare):
        a, b = _eval(node.left, pts), _eval(node.right, pts)
        return {"<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal}[
            node.op
        ](a, b)
    if isinstance(node, BoolOp):
        a, b = _eval(node.left, pts), _eval(node.right, pts)
        return np.logical_and(a, b) if node.op == "and" else np.logical_or(a, b)
    if isinstance(node, Not):
        return np.logical_not(_eval(node.operand, pts))
    raise TypeError(f"not an expression node: {node!r}")
