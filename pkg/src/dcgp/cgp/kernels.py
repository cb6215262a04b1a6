"""Kernel (node function) catalogue.

Binary kernels (+, -, *, /) act on the first two node inputs. Every other
kernel is unary and is applied to the *sum* of all the node inputs, so with
arity 2 a ``sin`` node computes ``sin(in1 + in2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from ..taylor import functions as F


@dataclass(frozen=True)
class Kernel:
    name: str
    fn: Callable
    binary: bool
    symbol: str = ""

    def __call__(self, inputs: Sequence):
        if self.binary:
            return self.fn(inputs[0], inputs[1])
        s = inputs[0]
        for v in inputs[1:]:
            s = s + v
        return self.fn(s)

    def render(self, operands: Sequence[str]) -> str:
        if self.binary:
            return f"({operands[0]}{self.symbol}{operands[1]})"
        if len(operands) == 1:
            return f"{self.name}({operands[0]})"
        return f"{self.name}((" + "+".join(operands) + "))"


def _add(a, b):
    return a + b


def _sub(a, b):
    return a - b


def _mul(a, b):
    return a * b


_BINARY = {
    "+": Kernel("sum", _add, True, "+"),
    "-": Kernel("diff", _sub, True, "-"),
    "*": Kernel("mul", _mul, True, "*"),
    "/": Kernel("div", F.div, True, "/"),
}
_ALIASES = {"sum": "+", "diff": "-", "mul": "*", "div": "/", "sigmoid": "sig"}


def kernel(name: str) -> Kernel:
    name = _ALIASES.get(name, name)
    if name in _BINARY:
        return _BINARY[name]
    if name == "sig":
        return Kernel("sig", F.sigmoid, False)
    if name in F.FUNCTIONS:
        return Kernel(name, F.FUNCTIONS[name], False)
    raise ValueError(f"unknown kernel {name!r}")


class KernelSet:
    """Ordered, non-empty list of kernels addressed by function genes."""

    def __init__(self, names: Iterable[str]):
        names = list(names)
        self.kernels = tuple(kernel(n) for n in names)
        if not self.kernels:
            raise ValueError("a kernel set needs at least one kernel")
        self.names = tuple(names)

    def __len__(self):
        return len(self.kernels)

    def __getitem__(self, i) -> Kernel:
        return self.kernels[i]

    def __iter__(self):
        return iter(self.kernels)

    def __eq__(self, other):
        return isinstance(other, KernelSet) and self.tags() == other.tags()

    def __hash__(self):
        return hash(self.tags())

    def tags(self) -> tuple:
        return tuple(k.symbol or k.name for k in self.kernels)

    def __repr__(self):
        return f"KernelSet({list(self.tags())})"
