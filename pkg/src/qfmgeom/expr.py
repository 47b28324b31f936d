"""Small expression language for the pre-processing functions of a feature map.

Grammar (lowest to highest precedence, all binary operators left associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ['-'] atom)*     # exponent must fold to a constant
    atom   := number | name | func '(' expr ')' | '(' expr ')'

Evaluation is numpy-vectorised: variables may be bound to arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

FUNCTIONS = ("sin", "cos", "arcsin", "arccos", "sqrt", "log", "exp")
CONSTANTS = {"pi": math.pi}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UndeclaredVariableError(ValueError):
    pass


class ExprDomainError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a name from FUNCTIONS
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Unary, Binary]


# -- smart constructors: constant folding and 0/1 elimination only ----------

def _const(node: Expr) -> float | None:
    return node.value if isinstance(node, Const) else None


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def add(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca + cb)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca - cb)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return neg(b)
    return Binary("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca * cb)
    if ca == 0.0 or cb == 0.0:
        return Const(0.0)
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    if ca == -1.0:
        return neg(b)
    if cb == -1.0:
        return neg(a)
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None and cb != 0.0:
        return Const(ca / cb)
    if ca == 0.0:
        return Const(0.0)
    if cb == 1.0:
        return a
    return Binary("/", a, b)


def power(a: Expr, exponent: float) -> Expr:
    ca = _const(a)
    if exponent == 0.0:
        return Const(1.0)
    if exponent == 1.0:
        return a
    if ca is not None:
        try:
            return Const(float(ca**exponent))
        except (OverflowError, ZeroDivisionError):
            pass
    return Binary("^", a, Const(exponent))


def func(name: str, a: Expr) -> Expr:
    return Unary(name, a)


# -- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, variables):
        self.text = text
        self.vars = set(variables)
        self.pos = 0

    def error(self, msg: str, offset: int | None = None):
        raise ExprSyntaxError(msg, self.pos if offset is None else offset)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            self.error(f"expected {ch!r}, found {found}")
        self.pos += 1

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            node = Binary(op, node, rhs)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.unary()
            node = Binary(op, node, rhs)
        return node

    def unary(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        while self.peek() == "^":
            self.pos += 1
            self.skip()
            start = self.pos
            exponent = _fold(self.exponent())
            if not isinstance(exponent, Const):
                self.error("exponent must be a constant", start)
            node = Binary("^", node, exponent)
        return node

    def exponent(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return neg(self.exponent())
        return self.atom()

    def atom(self) -> Expr:
        ch = self.peek()
        start = self.pos
        if not ch:
            self.error("unexpected end of input")
        if ch == "(":
            self.pos += 1
            node = self.expr()
            self.expect(")")
            return node
        if ch.isdigit() or ch == ".":
            return self.number()
        if ch.isalpha() or ch == "_":
            end = start
            while end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
                end += 1
            name = self.text[start:end]
            self.pos = end
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(name, arg)
            if self.peek() == "(":
                self.error(f"unknown function {name!r}", start)
            if name in self.vars:
                return Var(name)
            if name in CONSTANTS:
                return Const(CONSTANTS[name])
            raise UndeclaredVariableError(f"undeclared variable {name!r} at offset {start}")
        self.error(f"unexpected {ch!r}")

    def number(self) -> Expr:
        text, start = self.text, self.pos
        end = start
        while end < len(text) and (text[end].isdigit() or text[end] == "."):
            end += 1
        if end < len(text) and text[end] in "eE":
            exp_end = end + 1
            if exp_end < len(text) and text[exp_end] in "+-":
                exp_end += 1
            if exp_end < len(text) and text[exp_end].isdigit():
                while exp_end < len(text) and text[exp_end].isdigit():
                    exp_end += 1
                end = exp_end
        try:
            value = float(text[start:end])
        except ValueError:
            self.error(f"malformed number {text[start:end]!r}", start)
        self.pos = end
        return Const(value)


def _fold(node: Expr) -> Expr:
    """Constant-fold a whole tree."""
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Unary):
        arg = _fold(node.arg)
        if node.op == "neg":
            return neg(arg)
        if isinstance(arg, Const):
            try:
                return Const(float(_apply_unary(node.op, np.float64(arg.value), node)))
            except ExprDomainError:
                pass
        return Unary(node.op, arg)
    left, right = _fold(node.left), _fold(node.right)
    if node.op == "^":
        return power(left, right.value)
    return {"+": add, "-": sub, "*": mul, "/": div}[node.op](left, right)


def parse(text: str, variables=()) -> Expr:
    """Parse ``text``; every free name must be in ``variables``."""
    return _Parser(text, variables).parse()


# -- printer ---------------------------------------------------------------

def to_string(node: Expr) -> str:
    """Canonical fully parenthesised form; ``parse(to_string(e))`` rebuilds ``e``."""
    if isinstance(node, Const):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 or text.startswith("-") else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{to_string(node.arg)})"
        return f"{node.op}({to_string(node.arg)})"
    return f"({to_string(node.left)} {node.op} {to_string(node.right)})"


def variables_of(node: Expr) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, Unary):
        return variables_of(node.arg)
    return variables_of(node.left) | variables_of(node.right)


# -- evaluation ------------------------------------------------------------

def _domain(node: Expr, value, what: str):
    bad = np.asarray(value)
    sample = bad.ravel()[0] if bad.size == 1 else bad
    raise ExprDomainError(f"{what} in {to_string(node)} (argument {sample})")


def _apply_unary(op: str, x, node: Expr):
    if op == "neg":
        return -x
    if op == "sin":
        return np.sin(x)
    if op == "cos":
        return np.cos(x)
    if op in ("arcsin", "arccos"):
        if np.any(np.abs(x) > 1.0):
            _domain(node, x[np.abs(x) > 1.0] if np.ndim(x) else x, f"{op} argument outside [-1, 1]")
        return np.arcsin(x) if op == "arcsin" else np.arccos(x)
    if op == "sqrt":
        if np.any(x < 0):
            _domain(node, x, "sqrt of a negative number")
        return np.sqrt(x)
    if op == "log":
        if np.any(x <= 0):
            _domain(node, x, "log of a non-positive number")
        return np.log(x)
    if op == "exp":
        return np.exp(x)
    raise ValueError(f"unknown function {op!r}")


def evaluate(node: Expr, point: Mapping[str, float | np.ndarray]):
    """Evaluate at ``point``; arrays broadcast.  Returns a float for scalar input."""
    out = _eval(node, point)
    return float(out) if np.ndim(out) == 0 else out


def _eval(node: Expr, point):
    if isinstance(node, Const):
        return np.float64(node.value)
    if isinstance(node, Var):
        try:
            return np.asarray(point[node.name], dtype=float)
        except KeyError:
            raise UndeclaredVariableError(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Unary):
        return _apply_unary(node.op, _eval(node.arg, point), node)
    a = _eval(node.left, point)
    b = _eval(node.right, point)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(b == 0):
            _domain(node, b, "division by zero")
        return a / b
    # power with constant exponent
    if not float(b).is_integer() and np.any(a < 0):
        _domain(node, a, "negative base with fractional exponent")
    if float(b) < 0 and np.any(a == 0):
        _domain(node, a, "zero base with negative exponent")
    return np.power(a, b)


# -- differentiation -------------------------------------------------------

def differentiate(node: Expr, var: str) -> Expr:
    """Symbolic partial derivative with respect to ``var``."""
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.name == var else 0.0)
    if isinstance(node, Unary):
        u = node.arg
        du = differentiate(u, var)
        if isinstance(du, Const) and du.value == 0.0:
            return Const(0.0)
        if node.op == "neg":
            return neg(du)
        if node.op == "sin":
            return mul(func("cos", u), du)
        if node.op == "cos":
            return neg(mul(func("sin", u), du))
        if node.op == "exp":
            return mul(node, du)
        if node.op == "log":
            return div(du, u)
        if node.op == "sqrt":
            return div(du, mul(Const(2.0), node))
        root = func("sqrt", sub(Const(1.0), power(u, 2.0)))
        if node.op == "arcsin":
            return div(du, root)
        if node.op == "arccos":
            return neg(div(du, root))
        raise ValueError(f"unknown function {node.op!r}")
    a, b = node.left, node.right
    if node.op == "^":
        c = b.value
        return mul(mul(Const(c), power(a, c - 1.0)), differentiate(a, var))
    da, db = differentiate(a, var), differentiate(b, var)
    if node.op == "+":
        return add(da, db)
    if node.op == "-":
        return sub(da, db)
    if node.op == "*":
        return add(mul(da, b), mul(a, db))
    # quotient rule
    return div(sub(mul(da, b), mul(a, db)), power(b, 2.0))


def is_zero(node: Expr) -> bool:
    node = _fold(node)
    return isinstance(node, Const) and node.value == 0.0


def depends_on(node: Expr, var: str) -> bool:
    """True iff the folded derivative with respect to ``var`` is not identically zero."""
    return not is_zero(differentiate(node, var))
