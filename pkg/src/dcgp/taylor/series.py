"""Univariate Taylor coefficients ``f^(k)(p0) / k!`` for k = 0..n.

Each generator takes the expansion point ``p0`` (float or array) and the
order ``n`` and returns a list of ``n + 1`` coefficients. Functions without a
closed form go through truncated univariate series arithmetic on ``u = p0 + h``.
"""
from __future__ import annotations

import math

import numpy as np


def _mul(a, b, n):
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n + 1)]


def _inv(a, n):
    b = [1.0 / a[0]]
    for k in range(1, n + 1):
        b.append(-sum(a[i] * b[k - i] for i in range(1, k + 1)) / a[0])
    return b


def _pow(a, r, n, b0=None):
    b = [np.power(a[0], r) if b0 is None else b0]
    for k in range(1, n + 1):
        acc = sum(((r + 1) * i - k) * a[i] * b[k - i] for i in range(1, k + 1))
        b.append(acc / (k * a[0]))
    return b


def _exp(a, n):
    b = [np.exp(a[0])]
    for k in range(1, n + 1):
        b.append(sum(i * a[i] * b[k - i] for i in range(1, k + 1)) / k)
    return b


def _integrate(g, t0, n):
    return [t0] + [g[k - 1] / k for k in range(1, n + 1)]


def _square_shift(p0, n, sign, offset):
    # series of sign * u^2 + offset around u = p0 + h
    s = [sign * p0 * p0 + offset, sign * 2.0 * p0, sign * 1.0] + [0.0] * n
    return s[: n + 1]


def exp(p0, n):
    t = [np.exp(p0)]
    for k in range(1, n + 1):
        t.append(t[-1] / k)
    return t


def log(p0, n):
    t = [np.log(p0)]
    inv = 1.0 / p0
    pw = 1.0
    for k in range(1, n + 1):
        pw = pw * inv
        t.append(pw / k if k % 2 else -pw / k)
    return t


def _trig(values, n):
    fact = 1.0
    t = []
    for k in range(n + 1):
        if k:
            fact *= k
        t.append(values[k % 4] / fact)
    return t


def sin(p0, n):
    s, c = np.sin(p0), np.cos(p0)
    return _trig((s, c, -s, -c), n)


def cos(p0, n):
    s, c = np.sin(p0), np.cos(p0)
    return _trig((c, -s, -c, s), n)


def sinh(p0, n):
    s, c = np.sinh(p0), np.cosh(p0)
    return _trig((s, c, s, c), n)


def cosh(p0, n):
    s, c = np.sinh(p0), np.cosh(p0)
    return _trig((c, s, c, s), n)


def tan(p0, n):
    # T' = 1 + T^2
    t = [np.tan(p0)]
    for k in range(1, n + 1):
        acc = sum(t[i] * t[k - 1 - i] for i in range(k))
        t.append(((1.0 if k == 1 else 0.0) + acc) / k)
    return t


def tanh(p0, n):
    # T' = 1 - T^2
    t = [np.tanh(p0)]
    for k in range(1, n + 1):
        acc = sum(t[i] * t[k - 1 - i] for i in range(k))
        t.append(((1.0 if k == 1 else 0.0) - acc) / k)
    return t


def atan(p0, n):
    if n == 0:
        return [np.arctan(p0)]
    g = _inv(_square_shift(p0, n - 1, 1.0, 1.0), n - 1)
    return _integrate(g, np.arctan(p0), n)


def asin(p0, n):
    if n == 0:
        return [np.arcsin(p0)]
    g = _pow(_square_shift(p0, n - 1, -1.0, 1.0), -0.5, n - 1)
    return _integrate(g, np.arcsin(p0), n)


def acos(p0, n):
    if n == 0:
        return [np.arccos(p0)]
    g = _pow(_square_shift(p0, n - 1, -1.0, 1.0), -0.5, n - 1)
    return _integrate([-x for x in g], np.arccos(p0), n)


def atanh(p0, n):
    if n == 0:
        return [np.arctanh(p0)]
    g = _inv(_square_shift(p0, n - 1, -1.0, 1.0), n - 1)
    return _integrate(g, np.arctanh(p0), n)


def acosh(p0, n):
    if n == 0:
        return [np.arccosh(p0)]
    g = _pow(_square_shift(p0, n - 1, 1.0, -1.0), -0.5, n - 1)
    return _integrate(g, np.arccosh(p0), n)


def asinh(p0, n):
    if n == 0:
        return [np.arcsinh(p0)]
    g = _pow(_square_shift(p0, n - 1, 1.0, 1.0), -0.5, n - 1)
    return _integrate(g, np.arcsinh(p0), n)


_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def erf(p0, n):
    from scipy.special import erf as _erf

    if n == 0:
        return [_erf(p0)]
    g = _exp(_square_shift(p0, n - 1, -1.0, 0.0), n - 1)
    return _integrate([_TWO_OVER_SQRT_PI * x for x in g], _erf(p0), n)


def binomial(p0, r, n, t0):
    """Coefficients of ``u^r`` given its value ``t0`` at ``p0``."""
    t = [t0]
    for k in range(1, n + 1):
        t.append(t[-1] * (r - k + 1) / (k * p0))
    return t


def sqrt(p0, n):
    return binomial(p0, 0.5, n, np.sqrt(p0))


def cbrt(p0, n):
    return binomial(p0, 1.0 / 3.0, n, np.cbrt(p0))
