"""Closed-form solutions of differential equations by residual minimization.

The candidate program encodes S(x). Its inputs are promoted to GDual
variables over the whole batch of interior control points, so one
evaluation yields every derivative the residual needs. The error is

    Σ_i f(∂^α S, x_i)² + penalty · Σ_j (B_j S(x_j) − S_j)²

where ``B_j`` is the identity (Dirichlet) or a derivative (Neumann).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..cgp import CgpParams, Chromosome, EvaluationError, evaluate, expression_string
from ..evolve import EvolveConfig, RunReport, expected_run_time, run, run_many
from ..taylor import GDual, TaylorError, derivative, make_variable
from .parser import ResidualSpec, derivatives, parse_residual

DE_KERNELS = ("+", "-", "*", "/", "sin", "cos", "log", "exp")


@dataclass(frozen=True)
class BoundaryCondition:
    point: tuple
    value: float
    orders: tuple = ()  # ((var, k), ...); empty for a Dirichlet condition

    @property
    def total(self) -> int:
        return sum(k for _, k in self.orders)


@dataclass(frozen=True)
class DeProblem:
    variables: tuple
    residual: ResidualSpec
    interior: np.ndarray  # shape (n_points, n_vars)
    boundary: tuple = ()
    penalty: float = 1.0
    name: str = ""

    def __post_init__(self):
        pts = np.asarray(self.interior, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        object.__setattr__(self, "interior", pts)
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "boundary", tuple(self.boundary))
        if pts.shape[1] != len(self.variables):
            raise ValueError("interior points do not match the variable count")
        if not self.penalty > 0:
            raise ValueError("penalty must be > 0")
        for b in self.boundary:
            if len(b.point) != len(self.variables) or not all(map(math.isfinite, b.point)):
                raise ValueError(f"bad boundary point {b.point}")
            for v, _ in b.orders:
                if v not in self.variables:
                    raise ValueError(f"unknown variable {v!r} in boundary condition")

    @property
    def order(self) -> int:
        return self.residual.order_required


def grid(bounds: Sequence[tuple], counts: Sequence[int], interior: bool = True) -> np.ndarray:
    """Tensor grid over a box; ``interior`` drops the faces of the box."""
    axes = []
    for (lo, hi), n in zip(bounds, counts):
        if interior:
            axes.append(np.linspace(lo, hi, n + 2)[1:-1])
        else:
            axes.append(np.linspace(lo, hi, n))
    return np.array(list(itertools.product(*axes)), dtype=float)


def random_points(bounds: Sequence[tuple], n: int, rng: np.random.Generator) -> np.ndarray:
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    return lo + (hi - lo) * rng.random((n, len(bounds)))


def _promoted(points: np.ndarray, variables, order: int) -> list:
    cols = [points[:, j].copy() for j in range(points.shape[1])]
    if order == 0:
        return cols
    return [make_variable(v, c, order) for v, c in zip(variables, cols)]


def _deriv(s, orders, variables, n):
    if not orders:
        v = s.constant if isinstance(s, GDual) else s
    elif isinstance(s, GDual):
        v = derivative(s, dict(orders))
    else:
        v = 0.0
    return np.broadcast_to(np.asarray(v, dtype=float), (n,))


def residuals(x: Chromosome, p: CgpParams, prob: DeProblem) -> np.ndarray:
    """Residual values at the interior points."""
    pts = prob.interior
    n = pts.shape[0]
    with np.errstate(all="ignore"):
        s = evaluate(x, p, _promoted(pts, prob.variables, prob.order))[0]
        env = {v: pts[:, j] for j, v in enumerate(prob.variables)}
        env["S"] = _deriv(s, (), prob.variables, n)
        for d in derivatives(prob.residual.ast):
            env[d.orders] = _deriv(s, d.orders, prob.variables, n)
        r = prob.residual.evaluate(env)
    return np.broadcast_to(np.asarray(r, dtype=float), (n,))


def boundary_violations(x: Chromosome, p: CgpParams, prob: DeProblem) -> np.ndarray:
    out = []
    with np.errstate(all="ignore"):
        for b in prob.boundary:
            pt = np.asarray([b.point], dtype=float)
            s = evaluate(x, p, _promoted(pt, prob.variables, b.total))[0]
            out.append(float(_deriv(s, b.orders, prob.variables, 1)[0]) - b.value)
    return np.asarray(out, dtype=float)


def de_error(x: Chromosome, p: CgpParams, prob: DeProblem) -> float:
    """Squared residuals plus ``penalty`` times squared boundary violations (inf on failure)."""
    if p.n_in != len(prob.variables):
        raise ValueError(f"expected n_in = {len(prob.variables)}, got {p.n_in}")
    try:
        r = residuals(x, p, prob)
        b = boundary_violations(x, p, prob)
    except (EvaluationError, TaylorError, ZeroDivisionError):
        return math.inf
    err = float(np.sum(r * r)) + prob.penalty * float(np.sum(b * b))
    return err if math.isfinite(err) else math.inf


@dataclass(frozen=True)
class DeSettings:
    rows: int = 1
    cols: int = 15
    levels_back: int = 16
    arity: int = 2
    kernels: tuple = DE_KERNELS
    lam: int = 10
    max_gen: int = 2000
    success_eps: float = 1e-16

    def params(self, n_in: int) -> CgpParams:
        return CgpParams(n_in, 1, self.rows, self.cols, self.levels_back, self.arity,
                         list(self.kernels))


@dataclass
class DeResult:
    reports: list
    ert: float = field(init=False)

    def __post_init__(self):
        self.ert = expected_run_time(self.reports)


def solve_run(prob: DeProblem, settings: DeSettings, seed) -> RunReport:
    p = settings.params(len(prob.variables))
    cfg = EvolveConfig(settings.lam, settings.max_gen, settings.success_eps, seed)

    def fitness(x, rng):
        return de_error(x, p, prob)

    names = list(prob.variables)
    return run(None, p, fitness, cfg, describe=lambda c: expression_string(c, p, input_names=names)[0])


def solve_de(prob: DeProblem, settings: DeSettings | None = None, runs: int = 20, seed: int = 0,
             stop_on_success: bool = False) -> DeResult:
    """Multi-start search; run ``i`` uses seed ``(seed, i)``."""
    settings = settings or DeSettings()
    reports = run_many(lambda i: solve_run(prob, settings, (seed, i)), runs, stop_on_success)
    return DeResult(reports)


def make_problem(variables: Sequence[str], residual: str, interior: np.ndarray,
                 boundary: Sequence[BoundaryCondition] = (), penalty: float = 1.0,
                 name: str = "") -> DeProblem:
    return DeProblem(tuple(variables), parse_residual(residual, variables), interior,
                     tuple(boundary), penalty, name)


__all__ = [
    "BoundaryCondition", "DE_KERNELS", "DeProblem", "DeResult", "DeSettings", "boundary_violations",
    "de_error", "grid", "make_problem", "random_points", "residuals", "solve_de", "solve_run",
]
