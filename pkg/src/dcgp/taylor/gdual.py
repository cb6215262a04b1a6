"""Truncated multivariate Taylor polynomials (generalized dual numbers).

A :class:`GDual` stores a polynomial in the displacements ``d<symbol>`` of a
fixed set of symbols, truncated at a total degree ``order``. Coefficients are
either floats or 1-D float arrays; an array coefficient turns the polynomial
into a batch of independent polynomials that share their monomial structure.

Terms live in a dict keyed by exponent tuples (one exponent per symbol, in
the order of ``symbols``). The dict is always kept in graded-lexicographic
order and never contains an exactly-zero coefficient.
"""
from __future__ import annotations

import math
from functools import lru_cache
from collections.abc import Iterable, Mapping, Sequence
from typing import Union

import numpy as np

Coefficient = Union[float, np.ndarray]
MultiIndex = tuple

_SCALARS = (int, float, np.integer, np.floating)


class TaylorError(ArithmeticError):
    """Base class of the errors raised by the polynomial algebra."""


class OrderMismatch(TaylorError, ValueError):
    pass


class BatchMismatch(TaylorError, ValueError):
    pass


class DivisionByZeroConstant(TaylorError, ZeroDivisionError):
    pass


class OrderExceeded(TaylorError, ValueError):
    pass


class DomainError(TaylorError, ValueError):
    def __init__(self, function: str, value):
        self.function = function
        self.value = value
        super().__init__(f"{function}: constant part {value!r} is outside the domain")


@lru_cache(maxsize=None)
def _grlex(key: MultiIndex) -> tuple:
    return (sum(key), tuple(-e for e in key))


@lru_cache(maxsize=None)
def _deg(key: MultiIndex) -> int:
    return sum(key)


@lru_cache(maxsize=None)
def _zero_key(n: int) -> MultiIndex:
    return (0,) * n


@lru_cache(maxsize=None)
def _unit_key(n: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(n))


_KADD: dict = {}


def _kadd(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    try:
        return _KADD[a, b]
    except KeyError:
        k = _KADD[a, b] = tuple(x + y for x, y in zip(a, b))
        return k


@lru_cache(maxsize=None)
def _positions(src: tuple, dst: tuple) -> tuple:
    return tuple(dst.index(s) for s in src)


def _is_zero(v) -> bool:
    if type(v) is float:
        return v == 0
    if isinstance(v, np.ndarray):
        return not np.count_nonzero(v)
    return v == 0


def _coerce_coeff(v):
    if isinstance(v, np.ndarray) or isinstance(v, (list, tuple)):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0:
            return float(arr)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("batched coefficients must be non-empty 1-D arrays")
        return arr
    return float(v)


def _batch_of(v):
    return v.shape[0] if isinstance(v, np.ndarray) else None


def _merge_batch(b1, b2):
    if b1 is None:
        return b2
    if b2 is not None and b1 != b2:
        raise BatchMismatch(f"batch sizes differ: {b1} != {b2}")
    return b1


def _canonical(terms: dict) -> dict:
    return {k: terms[k] for k in sorted(terms, key=_grlex) if not _is_zero(terms[k])}


def _is_scalar(x) -> bool:
    return isinstance(x, _SCALARS) or isinstance(x, np.ndarray)


def _scalar_value(x):
    if isinstance(x, np.ndarray):
        return _coerce_coeff(x)
    return float(x)


def _any_zero(v) -> bool:
    if isinstance(v, np.ndarray):
        return bool((v == 0).any())
    return v == 0


class GDual:
    """Truncated Taylor polynomial with float or batched coefficients.

    ``GDual({(1, 0): 2.0, (0, 0): 1.0}, symbols=("x", "y"), order=2)`` is
    ``1 + 2 dx`` in P_2. Symbols are stored sorted; exponents are permuted
    to match.
    """

    __slots__ = ("symbols", "order", "terms", "batch")
    # keep numpy from broadcasting over GDual operands; ndarray ops defer to us
    __array_ufunc__ = None

    def __init__(
        self,
        terms: Mapping[MultiIndex, Coefficient] | None = None,
        symbols: Sequence[str] = (),
        order: int = 0,
    ):
        symbols = tuple(symbols)
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"duplicate symbols in {symbols}")
        if int(order) != order or order < 0:
            raise ValueError(f"order must be a nonnegative integer, got {order!r}")
        order = int(order)
        perm = sorted(range(len(symbols)), key=lambda i: symbols[i])
        sorted_symbols = tuple(symbols[i] for i in perm)
        out: dict = {}
        batch = None
        for key, value in (terms or {}).items():
            key = tuple(int(e) for e in key)
            if len(key) != len(symbols):
                raise ValueError(f"multi-index {key} does not match symbols {symbols}")
            if any(e < 0 for e in key):
                raise ValueError(f"negative exponent in {key}")
            if sum(key) > order:
                raise OrderExceeded(f"term {key} exceeds truncation order {order}")
            key = tuple(key[i] for i in perm)
            value = _coerce_coeff(value)
            batch = _merge_batch(batch, _batch_of(value))
            out[key] = out[key] + value if key in out else value
        self.symbols = sorted_symbols
        self.order = order
        self.terms = _canonical(out)
        self.batch = batch

    @classmethod
    def _raw(cls, symbols, order, terms, batch) -> "GDual":
        obj = object.__new__(cls)
        obj.symbols = symbols
        obj.order = order
        obj.terms = terms
        obj.batch = batch
        return obj

    # ---------- structure ----------
    @property
    def nvars(self) -> int:
        return len(self.symbols)

    @property
    def constant(self) -> Coefficient:
        """The constant part p0 (zeros when absent)."""
        v = self.terms.get(_zero_key(len(self.symbols)))
        if v is None:
            return np.zeros(self.batch) if self.batch is not None else 0.0
        return v

    def nonconstant(self) -> "GDual":
        """The non-constant part p̂."""
        zk = _zero_key(len(self.symbols))
        if zk not in self.terms:
            return self
        terms = {k: v for k, v in self.terms.items() if k != zk}
        return GDual._raw(self.symbols, self.order, terms, self.batch)

    def coeff(self, alpha) -> Coefficient:
        """Raw coefficient of ``d^alpha`` (no factorial)."""
        key = self._key(alpha)
        if key is None:
            return np.zeros(self.batch) if self.batch is not None else 0.0
        v = self.terms.get(key)
        if v is None:
            return np.zeros(self.batch) if self.batch is not None else 0.0
        return v

    def _key(self, alpha):
        if isinstance(alpha, Mapping):
            key = [0] * len(self.symbols)
            for name, k in alpha.items():
                if k == 0:
                    continue
                if name not in self.symbols:
                    return None
                key[self.symbols.index(name)] = int(k)
            return tuple(key)
        alpha = tuple(int(e) for e in alpha)
        if len(alpha) != len(self.symbols):
            raise ValueError(f"multi-index {alpha} does not match symbols {self.symbols}")
        return alpha

    def degree(self) -> int:
        return max((_deg(k) for k in self.terms), default=0)

    def is_constant(self) -> bool:
        zk = _zero_key(len(self.symbols))
        return all(k == zk for k in self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    # ---------- arithmetic ----------
    def _align(self, other: "GDual"):
        if self.order != other.order:
            raise OrderMismatch(f"truncation orders differ: {self.order} != {other.order}")
        batch = _merge_batch(self.batch, other.batch)
        if self.symbols == other.symbols:
            return self.symbols, self.terms, other.terms, batch
        union = tuple(sorted(set(self.symbols).union(other.symbols)))
        return union, _remap(self, union), _remap(other, union), batch

    def _add_scalar(self, s) -> "GDual":
        s = _scalar_value(s)
        batch = _merge_batch(self.batch, _batch_of(s))
        zk = _zero_key(len(self.symbols))
        terms = dict(self.terms)
        if zk in terms:
            v = terms[zk] + s
            if _is_zero(v):
                del terms[zk]
            else:
                terms[zk] = v
        elif not _is_zero(s):
            terms = {zk: s, **terms}
        return GDual._raw(self.symbols, self.order, terms, batch)

    def _add(self, other: "GDual", subtract: bool = False) -> "GDual":
        symbols, ta, tb, batch = self._align(other)
        out = dict(ta)
        fresh = False
        for k, v in tb.items():
            if k in out:
                r = out[k] - v if subtract else out[k] + v
                if _is_zero(r):
                    del out[k]
                else:
                    out[k] = r
            else:
                out[k] = -v if subtract else v
                fresh = True
        if fresh:
            out = {k: out[k] for k in sorted(out, key=_grlex)}
        return GDual._raw(symbols, self.order, out, batch)

    def _scale(self, s) -> "GDual":
        s = _scalar_value(s)
        batch = _merge_batch(self.batch, _batch_of(s))
        terms = {}
        for k, v in self.terms.items():
            r = v * s
            if not _is_zero(r):
                terms[k] = r
        return GDual._raw(self.symbols, self.order, terms, batch)

    def _mul(self, other: "GDual") -> "GDual":
        zs, zo = _zero_key(len(self.symbols)), _zero_key(len(other.symbols))
        if len(other.terms) == 1 and zo in other.terms and self.order == other.order:
            if self.symbols == other.symbols or not other.symbols:
                return self._scale(other.terms[zo])
        if len(self.terms) == 1 and zs in self.terms and self.order == other.order:
            if self.symbols == other.symbols or not self.symbols:
                return other._scale(self.terms[zs])
        symbols, ta, tb, batch = self._align(other)
        order = self.order
        items_b = [(kb, cb, _deg(kb)) for kb, cb in tb.items()]
        out: dict = {}
        for ka, ca in ta.items():
            lim = order - _deg(ka)
            for kb, cb, db in items_b:
                if db > lim:
                    break
                k = _kadd(ka, kb)
                v = ca * cb
                if k in out:
                    out[k] = out[k] + v
                else:
                    out[k] = v
        return GDual._raw(symbols, order, _canonical(out), batch)

    def __add__(self, other):
        if isinstance(other, GDual):
            return self._add(other)
        if _is_scalar(other):
            return self._add_scalar(other)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GDual):
            return self._add(other, subtract=True)
        if _is_scalar(other):
            return self._add_scalar(-_scalar_value(other))
        return NotImplemented

    def __rsub__(self, other):
        if _is_scalar(other):
            return (-self)._add_scalar(other)
        return NotImplemented

    def __neg__(self):
        return GDual._raw(self.symbols, self.order,
                          {k: -v for k, v in self.terms.items()}, self.batch)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, GDual):
            return self._mul(other)
        if _is_scalar(other):
            return self._scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GDual):
            if other.is_constant() and other.order == self.order and (
                    not other.symbols or other.symbols == self.symbols):
                return self._div_scalar(other.constant)
            result = self._mul(inverse(other))
            return _with_constant(result, self.constant, other.constant)
        if _is_scalar(other):
            return self._div_scalar(other)
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_scalar(other):
            return _with_constant(inverse(self)._scale(other), _scalar_value(other),
                                  self.constant)
        return NotImplemented

    def _div_scalar(self, s) -> "GDual":
        s = _scalar_value(s)
        if _any_zero(s):
            raise DivisionByZeroConstant("division by a zero constant")
        batch = _merge_batch(self.batch, _batch_of(s))
        terms = {}
        for k, v in self.terms.items():
            r = v / s
            if not _is_zero(r):
                terms[k] = r
        return GDual._raw(self.symbols, self.order, terms, batch)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __rpow__(self, base):
        if _is_scalar(base):
            from . import functions
            return functions.exp(self * functions.log(_scalar_value(base)))
        return NotImplemented

    def __abs__(self):
        from . import functions
        return functions.abs(self)

    # ---------- comparison and conversion ----------
    def __eq__(self, other):
        if not isinstance(other, GDual):
            return NotImplemented
        if self.order != other.order or self.symbols != other.symbols:
            return False
        if self.terms.keys() != other.terms.keys():
            return False
        return all(bool(np.all(np.asarray(v) == np.asarray(other.terms[k])))
                   for k, v in self.terms.items())

    __hash__ = None

    def isclose(self, other: "GDual", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        """Coefficient-wise closeness; absent terms count as zero."""
        diff = self - other
        for k, v in diff.terms.items():
            ref = np.maximum(np.abs(_lookup(self, diff.symbols, k)),
                             np.abs(_lookup(other, diff.symbols, k)))
            if np.any(np.abs(v) > atol + rtol * ref):
                return False
        return True

    def slot(self, i: int) -> "GDual":
        """Scalar polynomial held in batch slot ``i``."""
        terms = {}
        for k, v in self.terms.items():
            r = float(v[i]) if isinstance(v, np.ndarray) else v
            if r != 0:
                terms[k] = r
        return GDual._raw(self.symbols, self.order, terms, None)

    def batch_sum(self) -> "GDual":
        """Sum of the batch slots (a scalar-coefficient polynomial)."""
        if self.batch is None:
            return self
        terms = {}
        for k, v in self.terms.items():
            r = float(np.sum(v)) if isinstance(v, np.ndarray) else v * self.batch
            if r != 0:
                terms[k] = r
        return GDual._raw(self.symbols, self.order, terms, None)

    def to_string(self, digits: int = 6) -> str:
        return render(self, digits)

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"GDual({render(self, 17)!r}, symbols={self.symbols}, order={self.order})"

    def to_dict(self) -> dict:
        return to_dict(self)


def _lookup(p: GDual, symbols: tuple, key: MultiIndex):
    if p.symbols == symbols:
        return p.terms.get(key, 0.0)
    pos = _positions(p.symbols, symbols)
    if any(key[i] for i in range(len(symbols)) if i not in pos):
        return 0.0
    return p.terms.get(tuple(key[i] for i in pos), 0.0)


def _remap(p: GDual, union: tuple) -> dict:
    if p.symbols == union:
        return p.terms
    pos = _positions(p.symbols, union)
    n = len(union)
    out = {}
    for k, v in p.terms.items():
        nk = [0] * n
        for i, e in zip(pos, k):
            nk[i] = e
        out[tuple(nk)] = v
    return out


def _with_constant(p: GDual, num, den) -> GDual:
    # the value channel of a quotient is a0 / b0, bitwise what real division gives
    value = num / den
    zk = _zero_key(len(p.symbols))
    terms = dict(p.terms)
    if _is_zero(value):
        terms.pop(zk, None)
    elif zk in terms:
        terms[zk] = value
    else:
        terms = {zk: value, **terms}
    return GDual._raw(p.symbols, p.order, terms, p.batch)


# ---------- constructors ----------
def make_variable(name: str, point, order: int) -> GDual:
    """``point + d<name>`` truncated at ``order``."""
    if order < 0:
        raise ValueError("order must be >= 0")
    point = _coerce_coeff(point)
    terms = {}
    if not _is_zero(point):
        terms[(0,)] = point
    if order >= 1:
        terms[(1,)] = 1.0
    return GDual._raw((name,), int(order), terms, _batch_of(point))


def constant(value, order: int, symbols: Sequence[str] = ()) -> GDual:
    value = _coerce_coeff(value)
    symbols = tuple(sorted(symbols))
    terms = {} if _is_zero(value) else {_zero_key(len(symbols)): value}
    return GDual._raw(symbols, int(order), terms, _batch_of(value))


# ---------- module-level operations ----------
def add(a: GDual, b: GDual) -> GDual:
    return a + b


def sub(a: GDual, b: GDual) -> GDual:
    return a - b


def mul(a: GDual, b: GDual) -> GDual:
    return a * b


def div(a: GDual, b: GDual) -> GDual:
    return a / b


def inverse(p: GDual) -> GDual:
    """Multiplicative inverse by the geometric series in p̂/p0."""
    p0 = p.constant
    if _any_zero(p0):
        raise DivisionByZeroConstant("inverse of a polynomial with zero constant part")
    inv0 = 1.0 / p0
    q = p.nonconstant()._div_scalar(p0)
    if p.order == 0 or not q.terms:
        return GDual._raw(p.symbols, p.order, {_zero_key(len(p.symbols)): inv0},
                          _merge_batch(p.batch, _batch_of(inv0)))
    s = 1.0 - q
    for _ in range(p.order - 1):
        s = 1.0 - q * s
    return s._scale(inv0)


def power(p: GDual, exponent) -> GDual:
    """``p ** exponent``; integer exponents use repeated multiplication."""
    from . import functions
    if isinstance(exponent, GDual):
        return functions.exp(exponent * functions.log(p))
    if isinstance(exponent, (int, np.integer)) or float(exponent).is_integer():
        n = int(exponent)
        if n == 0:
            return constant(1.0, p.order, p.symbols)
        r = p
        for _ in range(abs(n) - 1):
            r = r * p
        return inverse(r) if n < 0 else r
    exponent = float(exponent)
    p0 = p.constant
    if np.any(np.asarray(p0) <= 0):
        raise DomainError("pow", p0)
    return functions.exp(functions.log(p) * exponent)


def derivative(p: GDual, alpha) -> Coefficient:
    """Partial derivative ``(∂^alpha f)(a)`` = alpha! times the coefficient.

    ``alpha`` is an exponent tuple aligned with ``p.symbols`` or a mapping
    from symbol name to derivative order (unknown names give zero).
    """
    if isinstance(alpha, Mapping):
        total = sum(int(k) for k in alpha.values())
        orders = [int(k) for k in alpha.values()]
    else:
        orders = [int(k) for k in alpha]
        total = sum(orders)
    if total > p.order:
        raise OrderExceeded(f"|alpha| = {total} exceeds truncation order {p.order}")
    c = p.coeff(alpha)
    f = math.prod(math.factorial(k) for k in orders)
    return c * f if f != 1 else c


def count_monomials(order: int, nvars: int) -> int:
    """Number of non-constant monomials of degree <= order in nvars variables."""
    return sum(math.comb(k + nvars - 1, k) for k in range(1, order + 1))


def truncate(p: GDual, order: int) -> GDual:
    terms = {k: v for k, v in p.terms.items() if _deg(k) <= order}
    return GDual._raw(p.symbols, int(order), terms, p.batch)


# ---------- rendering ----------
def _fmt(v: float, digits: int) -> str:
    return format(v, f".{digits}g")


def _monomial(symbols, key) -> str:
    parts = []
    for s, e in zip(symbols, key):
        if e == 1:
            parts.append(f"d{s}")
        elif e > 1:
            parts.append(f"d{s}^{e}")
    return "*".join(parts)


def render(p: GDual, digits: int = 6) -> str:
    """Human-readable polynomial, terms in graded-lex order."""
    if not p.terms:
        return "0"
    out = []
    for i, (k, v) in enumerate(p.terms.items()):
        mono = _monomial(p.symbols, k)
        if isinstance(v, np.ndarray):
            c = "[" + ", ".join(_fmt(float(x), digits) for x in v) + "]"
            sep = "" if i == 0 else "+"
            out.append(f"{sep}{c}*{mono}" if mono else f"{sep}{c}")
            continue
        if i == 0:
            sign = "-" if v < 0 else ""
        else:
            sign = "-" if v < 0 else "+"
        mag = abs(v)
        if mono and mag == 1:
            out.append(f"{sign}{mono}")
        elif mono:
            out.append(f"{sign}{_fmt(mag, digits)}*{mono}")
        else:
            out.append(f"{sign}{_fmt(mag, digits)}")
    return "".join(out)


def to_dict(p: GDual) -> dict:
    def enc(v):
        return v.tolist() if isinstance(v, np.ndarray) else v

    return {
        "symbols": list(p.symbols),
        "order": p.order,
        "terms": [[list(k), enc(v)] for k, v in p.terms.items()],
    }


def from_dict(d: Mapping) -> GDual:
    return GDual({tuple(k): v for k, v in d["terms"]}, symbols=d["symbols"], order=d["order"])


def monomials(nvars: int, order: int) -> Iterable[MultiIndex]:
    """All exponent tuples of degree <= order, graded-lex."""
    def rec(n, budget):
        if n == 0:
            yield ()
            return
        for e in range(budget, -1, -1):
            for rest in rec(n - 1, budget - e):
                yield (e,) + rest

    keys = list(rec(nvars, order))
    return sorted(keys, key=_grlex)
