"""Algebra of truncated Taylor polynomials (high-order forward-mode AD)."""
from .gdual import (
    BatchMismatch,
    Coefficient,
    DivisionByZeroConstant,
    DomainError,
    GDual,
    MultiIndex,
    OrderExceeded,
    OrderMismatch,
    TaylorError,
    add,
    constant,
    count_monomials,
    derivative,
    div,
    from_dict,
    inverse,
    make_variable,
    monomials,
    mul,
    power,
    render,
    sub,
    to_dict,
    truncate,
)
from .functions import FUNCTIONS, compose, elementary

__all__ = [
    "BatchMismatch", "Coefficient", "DivisionByZeroConstant", "DomainError", "FUNCTIONS",
    "GDual", "MultiIndex", "OrderExceeded", "OrderMismatch", "TaylorError", "add",
    "compose", "constant", "count_monomials", "derivative", "div", "elementary",
    "from_dict", "inverse", "make_variable", "monomials", "mul", "power", "render",
    "sub", "to_dict", "truncate",
]
