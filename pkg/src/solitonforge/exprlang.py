"""A small expression language for scalar fields on a coordinate chart.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = ("-" | "+") , unary | power ;
    power   = primary , [ "^" , unary ] ;
    primary = number | name | func , "(" , expr , ")" | "(" , expr , ")" ;
    func    = "exp" | "ln" | "sqrt" | "sin" | "cos" ;
    number  = digit , { digit } , [ "." , { digit } ] , [ exponent ]
            | "." , digit , { digit } , [ exponent ] ;
    exponent = ("e" | "E") , [ "+" | "-" ] , digit , { digit } ;
    name    = letter , { letter | digit | "_" } ;

``^`` binds tighter than unary minus (``-x^2`` is ``-(x^2)``) and is right
associative; the other binary operators are left associative.  Names must
be one of the chart's coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import jets as J
from .jets import Jet

FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos")
MAX_DEPTH = 120


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, text: str = "") -> None:
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class ExprDomainError(ExprError):
    """Evaluation left the domain of a partial function."""

    def __init__(self, message: str, subexpr: "Expr") -> None:
        self.subexpr = subexpr
        super().__init__(f"{message} in '{to_text(subexpr)}'")


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "Expr"


Expr = Union[Const, Var, Binary, Unary]


def interior_nodes(e: Expr) -> int:
    if isinstance(e, Binary):
        return 1 + interior_nodes(e.lhs) + interior_nodes(e.rhs)
    if isinstance(e, Unary):
        return 1 + interior_nodes(e.arg)
    return 0


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Binary):
        return variables(e.lhs) | variables(e.rhs)
    if isinstance(e, Unary):
        return variables(e.arg)
    return set()


# -- tokenizer ---------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # num, name, op, end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c.isascii() and (c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isascii() and text[i + 1].isdigit())):
            j = i
            while j < n and text[j].isascii() and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isascii() and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isascii() and text[k].isdigit():
                    while k < n and text[k].isascii() and text[k].isdigit():
                        k += 1
                    j = k
            literal = text[i:j]
            if not math.isfinite(float(literal)):
                raise ExprSyntaxError(f"numeric literal '{literal}' is not finite", i, text)
            tokens.append(_Token("num", literal, i))
            i = j
            continue
        if c.isascii() and c.isalpha():
            j = i
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], i))
            i = j
            continue
        if c in "+-*/^()":
            tokens.append(_Token("op", c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i, text)
    tokens.append(_Token("end", "", n))
    return tokens


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, coords: Sequence[str]) -> None:
        self.text = text
        self.coords = list(coords)
        self.tokens = _tokenize(text)
        self.pos = 0
        self.depth = 0
        self.heights: dict[int, int] = {}

    def node(self, n: Expr, *children: Expr) -> Expr:
        h = 1 + max((self.heights.get(id(c), 0) for c in children), default=0)
        if h > MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", self.peek().offset, self.text)
        self.heights[id(n)] = h
        return n

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> ExprSyntaxError:
        tok = tok or self.peek()
        if tok.kind == "end":
            message = f"{message}: unexpected end of input"
        else:
            message = f"{message}: unexpected {tok.text!r}"
        return ExprSyntaxError(message, tok.offset, self.text)

    def expect(self, text: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise self.error(f"expected {text!r}")
        self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek().kind != "end":
            raise self.error("trailing input")
        return e

    def expr(self) -> Expr:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", self.peek().offset, self.text)
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            rhs = self.term()
            e = self.node(Binary(op, e, rhs), e, rhs)
        self.depth -= 1
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            rhs = self.unary()
            e = self.node(Binary(op, e, rhs), e, rhs)
        return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text in "+-":
            self.take()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise ExprSyntaxError("expression nested too deeply", tok.offset, self.text)
            arg = self.unary()
            self.depth -= 1
            return self.node(Unary("neg", arg), arg) if tok.text == "-" else arg
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise ExprSyntaxError("expression nested too deeply", self.peek().offset, self.text)
            exponent = self.unary()
            self.depth -= 1
            return self.node(Binary("^", base, exponent), base, exponent)
        return base

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return Const(float(tok.text))
        if tok.kind == "name":
            self.take()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return self.node(Unary(tok.text, arg), arg)
            if self.peek().kind == "op" and self.peek().text == "(":
                raise ExprSyntaxError(f"unknown function '{tok.text}'", tok.offset, self.text)
            if tok.text not in self.coords:
                raise ExprSyntaxError(
                    f"unknown identifier '{tok.text}' (coordinates: {', '.join(self.coords)})",
                    tok.offset,
                    self.text,
                )
            return Var(tok.text, self.coords.index(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        raise self.error("expected a number, name or '('")


def parse(text: str, coords: Sequence[str]) -> Expr:
    """Parse ``text`` into an expression over the coordinate names ``coords``."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    return _Parser(text, coords).parse()


# -- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    """Render ``e`` so that :func:`parse` reproduces the same tree."""
    if isinstance(e, Const):
        s = _fmt_number(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_text(e.arg)
            if _prec(e.arg) < _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({to_text(e.arg)})"
    p = _PREC[e.op]
    left, right = to_text(e.lhs), to_text(e.rhs)
    if e.op == "^":
        # base must be atomic; the exponent may be any unary-level expression
        if _prec(e.lhs) <= p:
            left = f"({left})"
        if _prec(e.rhs) < _PREC["neg"]:
            right = f"({right})"
    else:
        if _prec(e.lhs) < p:
            left = f"({left})"
        if _prec(e.rhs) <= p:
            right = f"({right})"
    return f"{left} {e.op} {right}"


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC["neg"]
    return 99


# -- evaluation --------------------------------------------------------------

Value = Union[np.ndarray, Jet]


def _is_integer_const(e: Expr) -> bool:
    if isinstance(e, Unary) and e.op == "neg":
        return _is_integer_const(e.arg)
    return isinstance(e, Const) and e.value.is_integer()


def _const_value(e: Expr) -> float:
    if isinstance(e, Unary):
        return -_const_value(e.arg)
    return e.value


def _val(x: Value) -> np.ndarray:
    return x.value if isinstance(x, Jet) else np.asarray(x)


def evaluate(e: Expr, inputs: Sequence[Value]) -> Value:
    """Evaluate ``e`` with coordinate ``k`` bound to ``inputs[k]``.

    Inputs may be plain arrays (all sharing one shape) or jets; mixing is
    allowed and any jet input makes the result a jet.
    """
    if isinstance(e, Const):
        return np.asarray(e.value)
    if isinstance(e, Var):
        return inputs[e.index]
    if isinstance(e, Unary):
        a = evaluate(e.arg, inputs)
        if e.op == "neg":
            return -a
        av = _val(a)
        if e.op in ("ln", "sqrt") and np.any(av <= 0):
            raise ExprDomainError(f"{e.op} of a non-positive value", e)
        if isinstance(a, Jet):
            return getattr(J, e.op)(a)
        return {"exp": np.exp, "ln": np.log, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos}[e.op](a)
    a = evaluate(e.lhs, inputs)
    if e.op == "^" and _is_integer_const(e.rhs):
        p = int(_const_value(e.rhs))
        if p < 0 and np.any(_val(a) == 0):
            raise ExprDomainError("zero raised to a negative power", e)
        if isinstance(a, Jet):
            return J.power(a, p)
        return np.asarray(a, dtype=float) ** p
    b = evaluate(e.rhs, inputs)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(_val(b) == 0):
            raise ExprDomainError("division by zero", e)
        if not isinstance(a, Jet) and not isinstance(b, Jet):
            return np.asarray(a, dtype=float) / b
        return (a if isinstance(a, Jet) else J.lift(a, b.dim, b.order)) / b
    # general power: exp(b * ln(a))
    if np.any(_val(a) <= 0):
        raise ExprDomainError("non-integer power of a non-positive base", e)
    if isinstance(a, Jet):
        return J.exp(b * J.ln(a))
    if isinstance(b, Jet):
        return J.exp(b * np.log(np.asarray(a, dtype=float)))
    return np.power(np.asarray(a, dtype=float), b)


def eval_expr(e: Expr, point: Sequence[float] | np.ndarray) -> np.ndarray | float:
    """Evaluate at a point (last axis = coordinates); returns a float for a single point."""
    p = np.asarray(point, dtype=float)
    out = np.broadcast_to(evaluate(e, [p[..., k] for k in range(p.shape[-1])]), p.shape[:-1])
    return float(out) if out.ndim == 0 else np.array(out)


def eval_jet(e: Expr, point: Sequence[float] | np.ndarray, order: int) -> Jet:
    p = np.asarray(point, dtype=float)
    n = p.shape[-1]
    out = evaluate(e, J.seed_all(p, order))
    if isinstance(out, Jet):
        if out.shape != p.shape[:-1]:
            out = out + J.constant(np.zeros(p.shape[:-1]), n, order)
        return out
    return J.constant(np.broadcast_to(out, p.shape[:-1]).copy(), n, order)
