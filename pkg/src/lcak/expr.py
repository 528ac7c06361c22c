"""Closed-form scalar expressions over chart coordinates.

Grammar (EBNF), the contract for manifold definition files::

    expr    = term , { ( "+" | "-" ) , term } ;
    term    = unary , { ( "*" | "/" ) , unary } ;
    unary   = ( "-" | "+" ) , unary | power ;
    power   = primary , [ "^" , unary ] ;          (* right associative *)
    primary = number | ident | func , "(" , expr , ")" | "(" , expr , ")" ;
    func    = "exp" | "ln" | "sin" | "cos" | "sqrt" | "abs" ;
    number  = digits , [ "." , digits ] , [ ( "e" | "E" ) , [ "+" | "-" ] , digits ]
            | "." , digits , [ exponent ] ;
    ident   = letter , { letter | digit | "_" } ;

The exponent of ``^`` must be a constant (no coordinates).  Identifiers must be
declared chart coordinates; they are resolved to positional indices at parse time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt", "abs")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call]

_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            start = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ExprSyntaxError(
                f"unexpected character {source[start]!r}", start, ("number", "identifier", "operator", "(", ")")
            )
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, coords: Sequence[str]):
        self.tokens = _tokenize(source)
        self.i = 0
        self.coords = {name: k for k, name in enumerate(coords)}

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", pos, (op,))
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos, ("+", "-", "*", "/", "^", "end of input"))
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            left = _BINARY[op](left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            left = _BINARY[op](left, self.unary())
        return left

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            exponent = self.unary()
            if _has_var(exponent):
                raise ExprSyntaxError("exponent must be constant", pos + 1, ("number",))
            return Pow(base, exponent)
        return base

    def primary(self) -> Expr:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            if text not in self.coords:
                raise UnknownIdentifier(text, pos)
            return Var(self.coords[text], text)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(
            f"unexpected {text or 'end of input'!r}", pos, ("number", "identifier", "function", "(", "-")
        )


def _has_var(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, Num):
        return False
    if isinstance(e, (Neg, Call)):
        return _has_var(e.arg)
    if isinstance(e, Pow):
        return _has_var(e.base) or _has_var(e.exponent)
    return _has_var(e.left) or _has_var(e.right)


def parse(source: str, coords: Sequence[str]) -> Expr:
    """Parse ``source`` into an :data:`Expr` over the coordinate names ``coords``.

    Raises:
        ExprSyntaxError: on malformed input, with position and expected tokens.
        UnknownIdentifier: if an identifier is neither a function nor a coordinate.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0, ("number", "identifier", "function", "(", "-"))
    return _Parser(source, coords).parse()


# precedence used by the printer: higher binds tighter
_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _prec(e: Expr) -> int:
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    return _PREC.get(type(e), 5)


def _format_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v)) if v != 0 or math.copysign(1.0, v) > 0 else "-0"
    return repr(v)


def to_source(e: Expr) -> str:
    """Pretty-print with the minimal parentheses that reproduce the same tree."""
    if isinstance(e, Num):
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, 3)
    if isinstance(e, Pow):
        return _wrap(e.base, 5) + "^" + _wrap(e.exponent, 3)
    p = _PREC[type(e)]
    return _wrap(e.left, p) + _SYMBOL[type(e)] + _wrap(e.right, p + 1)


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_source(e)
    return s if _prec(e) >= min_prec else f"({s})"


def _domain(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise DomainError(f"{what} produced a non-finite value")
    return value


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainError("division by zero")
    return _domain(a / b, "division")


def _ln(a: float) -> float:
    if a <= 0.0:
        raise DomainError(f"ln of non-positive value {a!r}")
    return math.log(a)


def _sqrt(a: float) -> float:
    if a < 0.0:
        raise DomainError(f"sqrt of negative value {a!r}")
    return math.sqrt(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError("exp overflow") from None


def _pow(a: float, b: float) -> float:
    if not float(b).is_integer() and a < 0.0:
        raise DomainError(f"non-integer power of negative base {a!r}")
    if a == 0.0 and b < 0:
        raise DomainError("division by zero in negative power")
    try:
        return _domain(math.pow(a, b), "power")
    except OverflowError:
        raise DomainError("power overflow") from None


_FUNC_IMPL: dict[str, Callable[[float], float]] = {
    "exp": _exp,
    "ln": _ln,
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": _sqrt,
    "abs": abs,
}


def evaluate(e: Expr, point: Sequence[float]) -> float:
    """Recursive evaluation at ``point`` (indexed positionally).

    Raises:
        DomainError: on any non-real or non-finite intermediate.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(point[e.index])
    if isinstance(e, Neg):
        return -evaluate(e.arg, point)
    if isinstance(e, Call):
        return _domain(_FUNC_IMPL[e.func](evaluate(e.arg, point)), e.func)
    if isinstance(e, Pow):
        return _pow(evaluate(e.base, point), evaluate(e.exponent, point))
    a = evaluate(e.left, point)
    b = evaluate(e.right, point)
    if isinstance(e, Add):
        return _domain(a + b, "addition")
    if isinstance(e, Sub):
        return _domain(a - b, "subtraction")
    if isinstance(e, Mul):
        return _domain(a * b, "multiplication")
    return _div(a, b)


def _codegen(e: Expr) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return f"p[{e.index}]"
    if isinstance(e, Neg):
        return f"(-{_codegen(e.arg)})"
    if isinstance(e, Call):
        return f"_fn_{e.func}({_codegen(e.arg)})"
    if isinstance(e, Pow):
        return f"_pow({_codegen(e.base)}, {_codegen(e.exponent)})"
    if isinstance(e, Div):
        return f"_div({_codegen(e.left)}, {_codegen(e.right)})"
    return f"({_codegen(e.left)} {_SYMBOL[type(e)]} {_codegen(e.right)})"


_NAMESPACE = {"_pow": _pow, "_div": _div, **{f"_fn_{k}": v for k, v in _FUNC_IMPL.items()}}


def compile_many(exprs: Sequence[Expr]) -> Callable[[Sequence[float]], list[float]]:
    """Compile expressions into one callable returning all their values.

    Semantics match :func:`evaluate` (same helpers, same error behaviour) except
    that a non-finite sum or product is only caught by the caller's finiteness check.
    """
    body = ", ".join(_codegen(e) for e in exprs)
    code = f"lambda p: [{body}]"
    return eval(code, dict(_NAMESPACE))  # noqa: S307 - source is generated from a parsed tree
