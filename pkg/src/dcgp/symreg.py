"""Symbolic regression with learned real constants.

Two ways of learning constants are provided:

* ephemeral constants: ``k`` extra input terminals hold values ``c`` that are
  refined by one Newton step per fitness call (falling back to a few
  gradient-descent steps), and written back into a per-run
  :class:`ConstState` (Lamarckian learning);
* weighted programs: every connection weight is a parameter, learned by
  *weight batch learning* (repeated Newton steps on small random subsets of
  the active weights, keeping only improving steps).

Both read the gradient and Hessian of the quadratic error off a single
order-2 GDual evaluation of the program over the whole data batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cgp import (
    CgpParams,
    Chromosome,
    active_inputs,
    active_weights,
    evaluate,
    promote_weights,
)
from .cgp.program import weight_name
from .evolve import Evaluation
from .taylor import GDual, make_variable


class SingularHessian(np.linalg.LinAlgError):
    pass


def make_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` equally spaced points in [lo, hi], both ends included."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    if n < 2:
        raise ValueError("need n >= 2")
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class Dataset:
    """Inputs ``x`` with shape (n_points, n_vars) and targets ``y``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.shape[0] != y.shape[0]:
            raise ValueError("x and y have different numbers of points")
        if x.shape[0] < 2:
            raise ValueError("a dataset needs at least 2 points")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_function(cls, fn: Callable, lo: float, hi: float, n: int = 10) -> "Dataset":
        x = make_grid(lo, hi, n)
        return cls(x, fn(x))

    @property
    def n_points(self) -> int:
        return self.x.shape[0]

    @property
    def n_vars(self) -> int:
        return self.x.shape[1]

    def columns(self) -> list:
        return [self.x[:, j].copy() for j in range(self.n_vars)]


def quadratic_error(x: Chromosome, p: CgpParams, data: Dataset, constants: Sequence = (),
                    weights: Sequence | None = None, use_weights: bool = False):
    """Σ_i (y_i − ŷ_i)² over the dataset in one batched evaluation.

    ``constants`` feed the extra input terminals after the data columns;
    GDual entries there (or in ``weights``) make the result a GDual in those
    variables, otherwise a float is returned.
    """
    inputs = data.columns() + list(constants)
    with np.errstate(all="ignore"):
        y = evaluate(x, p, inputs, use_weights=use_weights, weights=weights)[0]
        r = y - data.y
        e = r * r
        if isinstance(e, GDual):
            return e.batch_sum()
        return float(np.sum(np.broadcast_to(e, data.y.shape)))


def _grad_hess(e, names: Sequence[str]):
    n = len(names)
    g = np.zeros(n)
    h = np.zeros((n, n))
    if not isinstance(e, GDual):
        return float(e), g, h
    # read the coefficients directly: d/da is c_a, d²/da² is 2·c_aa, d²/dadb is c_ab
    m = len(e.symbols)
    pos = [e.symbols.index(a) if a in e.symbols else -1 for a in names]

    def coef(*idx):
        if any(i < 0 for i in idx):
            return 0.0
        key = [0] * m
        for i in idx:
            key[i] += 1
        return float(e.terms.get(tuple(key), 0.0))

    for i in range(n):
        g[i] = coef(pos[i])
        if e.order >= 2:
            h[i, i] = 2.0 * coef(pos[i], pos[i])
            for j in range(i + 1, n):
                h[i, j] = h[j, i] = coef(pos[i], pos[j])
    return float(e.constant), g, h


def _newton_step(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise SingularHessian("non-finite derivatives")
    try:
        step = np.linalg.solve(h, g)
    except np.linalg.LinAlgError as e:
        raise SingularHessian(str(e)) from e
    if not np.all(np.isfinite(step)):
        raise SingularHessian("non-finite Newton step")
    return step


def _finite(v: float) -> float:
    return v if math.isfinite(v) else math.inf


def const_name(i: int) -> str:
    return f"c{i}"


@dataclass
class ConstState:
    """Current ephemeral-constant values, shared across a run."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).copy()
        if not np.all(np.isfinite(self.values)):
            raise ValueError("constants must be finite")


@dataclass
class NewtonResult:
    error: float
    values: np.ndarray
    branch: str  # "newton", "gradient", "none"


def newton_fitness_ephemeral(x: Chromosome, p: CgpParams, data: Dataset, state: ConstState,
                             gd_steps: int = 5, lr: float = 0.05) -> NewtonResult:
    """One Newton step on the active constants, else ``gd_steps`` gradient steps.

    The returned values are the best seen (the incoming values included), so
    the error never exceeds the error at the incoming constants.
    """
    k = len(state.values)
    n_data = data.n_vars
    if p.n_in != n_data + k:
        raise ValueError(f"expected n_in = {n_data + k}, got {p.n_in}")
    c0 = state.values.copy()
    act = [i for i in range(k) if n_data + i in active_inputs(x, p)]
    if not act:
        return NewtonResult(_finite(quadratic_error(x, p, data, c0)), c0, "none")
    names = [const_name(i) for i in act]

    def at(c, order):
        consts = list(c)
        for i in act:
            consts[i] = make_variable(const_name(i), c[i], order)
        return _grad_hess(quadratic_error(x, p, data, consts), names)

    e0, g, h = at(c0, 2)
    e0 = _finite(e0)
    if e0 == math.inf:
        return NewtonResult(e0, c0, "none")
    try:
        c1 = c0.copy()
        c1[act] -= _newton_step(g, h)
        e1 = _finite(quadratic_error(x, p, data, c1))
        if e1 < e0:
            return NewtonResult(e1, c1, "newton")
    except SingularHessian:
        pass
    best_e, best_c = e0, c0
    c = c0.copy()
    for _ in range(gd_steps):
        if not np.all(np.isfinite(g)):
            break
        c = c.copy()
        c[act] -= lr * g
        e, g, _ = at(c, 1)
        e = _finite(e)
        if e < best_e:
            best_e, best_c = e, c
        if e == math.inf:
            break
    return NewtonResult(best_e, best_c, "gradient")


class EphemeralFitness:
    """Fitness for :func:`dcgp.evolve.run` with Lamarckian ephemeral constants.

    Every mutant is scored from the committed constants; the constants of
    the selected mutant are committed by the evolution loop.
    """

    def __init__(self, params: CgpParams, data: Dataset, state: ConstState,
                 gd_steps: int = 5, lr: float = 0.05):
        self.params = params
        self.data = data
        self.state = state
        self.gd_steps = gd_steps
        self.lr = lr

    def __call__(self, x: Chromosome, rng=None) -> Evaluation:
        res = newton_fitness_ephemeral(x, self.params, self.data, self.state,
                                       self.gd_steps, self.lr)
        return Evaluation(res.error, state=res.values)

    def commit(self, values) -> None:
        self.state.values = np.asarray(values, dtype=float).copy()


@dataclass
class WeightLearningResult:
    error: float
    weights: np.ndarray
    trace: list = field(default_factory=list, repr=False)


def weight_batch_learning(x: Chromosome, p: CgpParams, data: Dataset, n_iter: int,
                          rng: np.random.Generator, subset_sizes: Sequence[int] = (2, 3),
                          init: Sequence[float] | None = None) -> WeightLearningResult:
    """Newton steps on random subsets of the active weights, keeping improvements.

    Weights start from a standard normal draw unless ``init`` is given.
    """
    if init is None:
        w = rng.standard_normal(p.n_weights)
    else:
        w = np.asarray(init, dtype=float).copy()
    act = active_weights(x, p)
    if not act:
        raise ValueError("the program has no active weights")
    width = p.arity
    err = _finite(quadratic_error(x, p, data, weights=w))
    trace = [err]
    for _ in range(n_iter):
        n_w = int(rng.choice(subset_sizes))
        picks = rng.choice(len(act), size=min(n_w, len(act)), replace=False)
        idx = [act[int(i)] for i in picks]
        if err == 0.0 or err == math.inf:
            trace.append(err)
            continue
        which = [(p.n_in + i // width, i % width) for i in idx]
        names = [weight_name(n, s) for n, s in which]
        wx = x.with_weights(w)
        try:
            e, g, h = _grad_hess(quadratic_error(x, p, data, weights=promote_weights(wx, p, which, 2)),
                                 names)
            step = _newton_step(g, h)
        except SingularHessian:
            trace.append(err)
            continue
        trial = w.copy()
        trial[idx] -= step
        e1 = _finite(quadratic_error(x, p, data, weights=trial))
        if e1 < err:
            w, err = trial, e1
        trace.append(err)
    return WeightLearningResult(err, w, trace)


class WeightedFitness:
    """Fitness for :func:`dcgp.evolve.run` with weight batch learning."""

    def __init__(self, params: CgpParams, data: Dataset, n_iter: int = 100,
                 subset_sizes: Sequence[int] = (2, 3)):
        self.params = params
        self.data = data
        self.n_iter = n_iter
        self.subset_sizes = tuple(subset_sizes)

    def __call__(self, x: Chromosome, rng: np.random.Generator) -> Evaluation:
        if not active_weights(x, self.params):
            return Evaluation(_finite(quadratic_error(x, self.params, self.data)))
        res = weight_batch_learning(x, self.params, self.data, self.n_iter, rng,
                                    self.subset_sizes)
        return Evaluation(res.error, chromosome=x.with_weights(res.weights))


def polynomial_coefficients(model: Callable, degree: int, center: float = 0.0) -> np.ndarray:
    """Monomial coefficients a_0..a_degree of a univariate ``model``.

    The model is expanded to order ``degree`` around ``center`` and the
    expansion re-based at 0; exact (to rounding) when the model is a
    polynomial of degree ≤ ``degree``.
    """
    t = model(make_variable("t", center, degree))
    b = np.array([float(t.coeff((j,))) if isinstance(t, GDual) else (float(t) if j == 0 else 0.0)
                  for j in range(degree + 1)])
    a = np.zeros(degree + 1)
    for j, bj in enumerate(b):
        for i in range(j + 1):
            a[i] += bj * math.comb(j, i) * (-center) ** (j - i)
    return a
