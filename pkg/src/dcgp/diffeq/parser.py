"""Recursive-descent parser for residual and right-hand-side expressions.

Grammar (loosest binding first)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?          # right associative, binds tighter than unary minus
    atom   := NUMBER | NAME | NAME "(" args ")" | "(" expr ")"

``diff(S, x, 2)`` or ``diff(S, x, 1, y, 1)`` denote partial derivatives of
the unknown ``S``; an omitted order means 1. ``pi`` and ``e`` are constants.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from ..taylor import functions as F


class ParseError(ValueError):
    """Base class; carries 1-based ``line`` and ``column``."""

    def __init__(self, message: str, line: int = 0, column: int = 0, text: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.text = text
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message + self._pointer())

    def _pointer(self) -> str:
        if not self.line or not self.text:
            return ""
        src = self.text.splitlines()[self.line - 1] if self.text.splitlines() else ""
        return f"\n  {src}\n  {' ' * (self.column - 1)}^"


class ExpressionSyntaxError(ParseError):
    pass


class UnknownIdentifier(ParseError):
    pass


class UnsupportedOrder(ParseError):
    pass


# ---------- AST ----------
@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unknown:
    """The unknown function S."""


@dataclass(frozen=True)
class Deriv:
    orders: tuple  # ((var, k), ...), sorted by var, k >= 1

    @property
    def total(self) -> int:
        return sum(k for _, k in self.orders)


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Num, Const, Var, Unknown, Deriv, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}
# these accept floats, arrays and GDuals alike
CALLS = {
    "sin": F.sin, "cos": F.cos, "exp": F.exp, "log": F.log,
    "sqrt": F.sqrt, "abs": F.abs,
}


# ---------- tokens ----------
@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    line: int
    column: int


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}",
                                        line, pos - line_start + 1, text)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("end", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str, variables: Sequence[str], allow_unknown: bool):
        self.text = text
        self.variables = tuple(variables)
        self.allow_unknown = allow_unknown
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, cls, msg, tok: Token):
        raise cls(msg, tok.line, tok.column, self.text)

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text or t.kind == "num":
            found = "end of input" if t.kind == "end" else repr(t.text)
            self.error(ExpressionSyntaxError, f"expected {text!r}, found {found}", t)
        return t

    def parse(self) -> Node:
        if self.peek().kind == "end":
            self.error(ExpressionSyntaxError, "empty expression", self.peek())
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            self.error(ExpressionSyntaxError, f"unexpected {t.text!r}", t)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.next().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        t = self.peek()
        if t.kind == "op" and t.text in ("-", "+"):
            self.next()
            arg = self.unary()
            return Neg(arg) if t.text == "-" else arg
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.next()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        t = self.next()
        if t.kind == "num":
            return Num(float(t.text))
        if t.kind == "op" and t.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "name":
            nxt = self.peek()
            is_call = nxt.kind == "op" and nxt.text == "("
            if is_call:
                return self.call(t)
            if t.text in self.variables:
                return Var(t.text)
            if t.text == "S":
                if not self.allow_unknown:
                    self.error(UnknownIdentifier, "S is not allowed here", t)
                return Unknown()
            if t.text in CONSTANTS:
                return Const(t.text)
            if t.text in CALLS or t.text == "diff":
                self.error(ExpressionSyntaxError, f"{t.text} must be called as {t.text}(...)", t)
            self.error(UnknownIdentifier, f"unknown identifier {t.text!r}", t)
        found = "end of input" if t.kind == "end" else repr(t.text)
        self.error(ExpressionSyntaxError, f"unexpected {found}", t)

    def call(self, name: Token) -> Node:
        if name.text == "diff":
            return self.diff(name)
        if name.text not in CALLS:
            self.error(UnknownIdentifier, f"unknown function {name.text!r}", name)
        self.expect("(")
        arg = self.expr()
        self.expect(")")
        return Call(name.text, arg)

    def diff(self, name: Token) -> Node:
        if not self.allow_unknown:
            self.error(UnknownIdentifier, "diff is not allowed here", name)
        self.expect("(")
        t = self.next()
        if t.text != "S" or t.kind != "name":
            self.error(ExpressionSyntaxError, "the first argument of diff must be S", t)
        orders: dict = {}
        while self.peek().text == ",":
            self.next()
            v = self.next()
            if v.kind != "name":
                self.error(ExpressionSyntaxError, "expected a variable name in diff", v)
            if v.text not in self.variables:
                self.error(UnknownIdentifier, f"unknown variable {v.text!r} in diff", v)
            k = 1
            if self.peek().text == "," and self.tokens[self.i + 1].kind == "num":
                self.next()
                kt = self.next()
                kv = float(kt.text)
                if not kv.is_integer() or kv < 1:
                    self.error(UnsupportedOrder, f"derivative order must be a positive integer, got {kt.text}", kt)
                k = int(kv)
            orders[v.text] = orders.get(v.text, 0) + k
        if not orders:
            self.error(ExpressionSyntaxError, "diff needs at least one variable", self.peek())
        self.expect(")")
        return Deriv(tuple(sorted(orders.items())))


@dataclass(frozen=True)
class ResidualSpec:
    ast: Node
    variables: tuple
    text: str = ""

    @property
    def order_required(self) -> int:
        return max((d.total for d in derivatives(self.ast)), default=0)

    def evaluate(self, env: Mapping):
        return evaluate(self.ast, env)

    def render(self) -> str:
        return render(self.ast)


def parse_expression(text: str, variables: Sequence[str], allow_unknown: bool = True) -> Node:
    return _Parser(text, variables, allow_unknown).parse()


def parse_residual(text: str, variables: Sequence[str], max_order: int | None = None) -> ResidualSpec:
    """Parse a residual ``f(∂^α S, x)``; raises UnsupportedOrder above ``max_order``."""
    spec = ResidualSpec(parse_expression(text, variables, True), tuple(variables), text)
    if max_order is not None and spec.order_required > max_order:
        raise UnsupportedOrder(
            f"residual needs derivatives of order {spec.order_required}, "
            f"the configured maximum is {max_order}")
    return spec


# ---------- walks ----------
def _children(node: Node):
    if isinstance(node, (Neg, Call)):
        return (node.arg,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    return ()


def walk(node: Node):
    yield node
    for c in _children(node):
        yield from walk(c)


def derivatives(node: Node) -> set:
    return {n for n in walk(node) if isinstance(n, Deriv)}


def variables_used(node: Node) -> set:
    out = set()
    for n in walk(node):
        if isinstance(n, Var):
            out.add(n.name)
        elif isinstance(n, Deriv):
            out.update(v for v, _ in n.orders)
    return out


def render(node: Node) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unknown):
        return "S"
    if isinstance(node, Deriv):
        return "diff(S," + ",".join(f"{v},{k}" for v, k in node.orders) + ")"
    if isinstance(node, Neg):
        return f"(-{render(node.arg)})"
    if isinstance(node, BinOp):
        return f"({render(node.left)}{node.op}{render(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({render(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Node, env: Mapping):
    """Numeric value of ``node``.

    ``env`` maps variable names to values, ``"S"`` to the unknown and each
    :class:`Deriv` node (or its ``orders`` tuple) to the derivative values.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Unknown):
        return env["S"]
    if isinstance(node, Deriv):
        return env[node.orders] if node.orders in env else env[node]
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Call):
        return CALLS[node.fn](evaluate(node.arg, env))
    if isinstance(node, BinOp):
        a = evaluate(node.left, env)
        b = evaluate(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return F.div(a, b)
        if isinstance(b, (int, float)):
            return F.pow(a, b)
        return F.exp(b * F.log(a))
    raise TypeError(f"not an expression node: {node!r}")
