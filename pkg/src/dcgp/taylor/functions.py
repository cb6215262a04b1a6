"""Elementary functions over floats, float arrays and :class:`GDual`.

Every function accepts any of the three numeric kinds. On a GDual the
scalar Taylor series of the function around the constant part p0 is
composed with the non-constant part p̂ (finite because p̂ is nilpotent).
The value channel always goes through the same NumPy call as the plain
real evaluation, so real and GDual evaluations agree exactly on p0.
"""
from __future__ import annotations

import builtins

import numpy as np
from scipy import special

from . import series
from .gdual import DivisionByZeroConstant, DomainError, GDual, _any_zero, inverse, power

__all__ = [
    "FUNCTIONS", "abs", "acos", "acosh", "asin", "asinh", "atan", "atanh", "cbrt",
    "compose", "cos", "cosh", "div", "elementary", "erf", "exp", "log", "pow",
    "sigmoid", "sin", "sinh", "sqrt", "tan", "tanh",
]


def compose(p: GDual, coeffs) -> GDual:
    """Σ_k coeffs[k] · p̂^k by Horner's rule, truncated at ``p.order``."""
    phat = p.nonconstant()
    n = len(coeffs) - 1
    if n == 0 or not phat.terms:
        return phat * 0.0 + coeffs[0]
    r = phat * coeffs[n]
    for k in range(n - 1, 0, -1):
        r = (r + coeffs[k]) * phat
    return r + coeffs[0]


def _checked(name, value, ok):
    if not np.all(ok(value)):
        raise DomainError(name, value)


def _unary(name, real, coeffs, domain=None):
    def f(x):
        if isinstance(x, GDual):
            p0 = x.constant
            if domain is not None:
                _checked(name, p0, domain)
            return compose(x, coeffs(p0, x.order))
        if domain is not None:
            _checked(name, x, domain)
        return real(x)

    f.__name__ = name
    f.__qualname__ = name
    return f


exp = _unary("exp", np.exp, series.exp)
log = _unary("log", np.log, series.log, lambda v: np.asarray(v) > 0)
sin = _unary("sin", np.sin, series.sin)
cos = _unary("cos", np.cos, series.cos)
tan = _unary("tan", np.tan, series.tan)
atan = _unary("atan", np.arctan, series.atan)
asin = _unary("asin", np.arcsin, series.asin, lambda v: np.abs(v) < 1)
acos = _unary("acos", np.arccos, series.acos, lambda v: np.abs(v) < 1)
sinh = _unary("sinh", np.sinh, series.sinh)
cosh = _unary("cosh", np.cosh, series.cosh)
tanh = _unary("tanh", np.tanh, series.tanh)
atanh = _unary("atanh", np.arctanh, series.atanh, lambda v: np.abs(v) < 1)
acosh = _unary("acosh", np.arccosh, series.acosh, lambda v: np.asarray(v) > 1)
asinh = _unary("asinh", np.arcsinh, series.asinh)
erf = _unary("erf", special.erf, series.erf)
sqrt = _unary("sqrt", np.sqrt, series.sqrt, lambda v: np.asarray(v) > 0)
cbrt = _unary("cbrt", np.cbrt, series.cbrt, lambda v: np.asarray(v) != 0)


def abs(x):
    """|x| as sign(p0)·x; undefined (DomainError) at p0 = 0."""
    if isinstance(x, GDual):
        p0 = x.constant
        _checked("abs", p0, lambda v: np.asarray(v) != 0)
        return x * np.sign(p0)
    _checked("abs", x, lambda v: np.asarray(v) != 0)
    return np.abs(x)


def sigmoid(x):
    if isinstance(x, GDual):
        return inverse(1.0 + exp(-x))
    return 1.0 / (1.0 + np.exp(-x))


def div(a, b):
    """a / b, raising DivisionByZeroConstant on a zero (constant part of the) divisor."""
    if isinstance(a, GDual) or isinstance(b, GDual):
        return a / b
    if _any_zero(b):
        raise DivisionByZeroConstant("division by zero")
    return a / b


def pow(x, k):
    """x ** k. Integer k: repeated multiplication; otherwise exp(k·log(x))."""
    if isinstance(x, GDual):
        return power(x, k)
    if isinstance(k, GDual):
        return exp(k * log(x))
    if isinstance(k, (int, np.integer)) or float(k).is_integer():
        n = int(k)
        if n == 0:
            return np.ones_like(x, dtype=float) if isinstance(x, np.ndarray) else 1.0
        r = x
        for _ in range(builtins.abs(n) - 1):
            r = r * x
        return div(1.0, r) if n < 0 else r
    _checked("pow", x, lambda v: np.asarray(v) > 0)
    return np.exp(np.log(x) * float(k))


FUNCTIONS = {
    "exp": exp, "log": log, "sin": sin, "cos": cos, "tan": tan, "atan": atan,
    "acos": acos, "asin": asin, "sinh": sinh, "cosh": cosh, "tanh": tanh,
    "atanh": atanh, "acosh": acosh, "asinh": asinh, "erf": erf, "sqrt": sqrt,
    "cbrt": cbrt, "abs": abs, "sigmoid": sigmoid,
}


def elementary(tag: str, x, *args):
    """Apply the function named ``tag`` (``pow`` takes the exponent as extra arg)."""
    if tag == "pow":
        return pow(x, *args)
    try:
        fn = FUNCTIONS[tag]
    except KeyError:
        raise ValueError(f"unknown function {tag!r}") from None
    return fn(x)
