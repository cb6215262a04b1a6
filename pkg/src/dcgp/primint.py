"""Search for prime integrals of ODE systems.

A candidate P(x, params) is a prime integral when dP/dt = Σ_i ∂P/∂x_i · f_i
vanishes everywhere. The state variables are promoted to order-1 GDuals over
a batch of phase-space control points (parameters are sampled per point
too, but stay plain values), so one evaluation gives every ∂P/∂x_i.

Error forms:

* GENERIC: Σ_j (Σ_i ∂P/∂x_i f_i)²
* RATIO(u, v) and EXCLUDE(u, v): Σ_j [Σ_i (∂P/∂x_i / ∂P/∂v)(f_i / f_u)]².
  With two state variables this is [P_u/P_v + f_v/f_u]²; on the full TBP
  state it pushes evolution away from integrals with ∂P/∂v = 0, such as the
  angular momentum. Any zero denominator gives an infinite error.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cgp import CgpParams, Chromosome, EvaluationError, evaluate, expression_string
from .diffeq.parser import Node, evaluate as eval_ast, parse_expression, render
from .evolve import (
    CHECK_STREAM,
    SETUP_STREAM,
    EvolveConfig,
    RunReport,
    expected_run_time,
    run,
    run_many,
    substream,
)
from .taylor import GDual, TaylorError, make_variable

PI_KERNELS = ("+", "-", "*", "/", "sin", "cos")
SUPPRESS_TOL = 1e-12


class Form(enum.Enum):
    GENERIC = "generic"
    RATIO = "ratio"
    EXCLUDE = "exclude"


@dataclass(frozen=True)
class PiErrorForm:
    kind: Form = Form.GENERIC
    u: str = ""
    v: str = ""

    @classmethod
    def parse(cls, spec) -> "PiErrorForm":
        """From ``"generic"``, ``"ratio:x,v"``, ``"exclude:r,v"`` or a mapping."""
        if isinstance(spec, PiErrorForm):
            return spec
        if isinstance(spec, dict):
            return cls(Form(spec["kind"]), spec.get("u", ""), spec.get("v", ""))
        kind, _, rest = str(spec).partition(":")
        u, _, v = rest.partition(",")
        return cls(Form(kind.strip().lower()), u.strip(), v.strip())

    def __str__(self):
        if self.kind is Form.GENERIC:
            return "generic"
        return f"{self.kind.value}:{self.u},{self.v}"


@dataclass(frozen=True)
class OdeSystem:
    """dx_i/dt = f_i(x, params); program inputs are ``state + params``."""

    state: tuple
    rhs: tuple  # parsed expressions, one per state variable
    params: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "state", tuple(self.state))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        if len(self.rhs) != len(self.state):
            raise ValueError("need one right-hand side per state variable")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")

    @classmethod
    def from_text(cls, state: Sequence[str], rhs: Sequence[str], params: Sequence[str] = (),
                  name: str = "") -> "OdeSystem":
        names = tuple(state) + tuple(params)
        return cls(tuple(state), tuple(parse_expression(t, names, allow_unknown=False) for t in rhs),
                   tuple(params), name)

    @property
    def variables(self) -> tuple:
        return self.state + self.params

    def f(self, points: np.ndarray) -> list:
        env = {v: points[:, j] for j, v in enumerate(self.variables)}
        n = points.shape[0]
        with np.errstate(all="ignore"):
            return [np.broadcast_to(np.asarray(eval_ast(e, env), dtype=float), (n,)) for e in self.rhs]

    def describe(self) -> str:
        return "; ".join(f"d{s}/dt = {render(e)}" for s, e in zip(self.state, self.rhs))


def sample_points(bounds: Sequence[tuple], n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform samples in the box, each coordinate in (lo, hi]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("bounds must be finite")
    return hi - (hi - lo) * rng.random((n, len(bounds)))


def _gradient(P: Callable, sys: OdeSystem, pts: np.ndarray):
    """Value and state gradient of ``P`` (a function of the input list) at every point."""
    n = pts.shape[0]
    inputs = []
    for j, name in enumerate(sys.variables):
        col = pts[:, j].copy()
        inputs.append(make_variable(name, col, 1) if name in sys.state else col)
    with np.errstate(all="ignore"):
        out = P(inputs)
    grads = []
    for name in sys.state:
        if isinstance(out, GDual):
            g = out.coeff({name: 1})
        else:
            g = 0.0
        grads.append(np.broadcast_to(np.asarray(g, dtype=float), (n,)))
    return out, grads


def _combine(grads, f, sys: OdeSystem, form: PiErrorForm) -> float:
    with np.errstate(all="ignore"):
        if form.kind is Form.GENERIC:
            dpdt = sum(g * fi for g, fi in zip(grads, f))
            err = float(np.sum(dpdt * dpdt))
        else:
            iu, iv = sys.state.index(form.u), sys.state.index(form.v)
            pv, fu = grads[iv], f[iu]
            if np.any(pv == 0) or np.any(fu == 0):
                return math.inf
            terms = sum((g / pv) * (fi / fu) for g, fi in zip(grads, f))
            err = float(np.sum(terms * terms))
    return err if math.isfinite(err) else math.inf


def pi_error_of(P: Callable, sys: OdeSystem, pts: np.ndarray, form: PiErrorForm) -> float:
    """Error of an arbitrary candidate ``P(inputs)``; infinite on evaluation failure."""
    form = PiErrorForm.parse(form)
    _check_form(sys, form)
    try:
        _, grads = _gradient(P, sys, pts)
    except (EvaluationError, TaylorError, ZeroDivisionError):
        return math.inf
    return _combine(grads, sys.f(pts), sys, form)


def pi_error(x: Chromosome, p: CgpParams, sys: OdeSystem, pts: np.ndarray,
             form: PiErrorForm = PiErrorForm()) -> float:
    if p.n_in != len(sys.variables):
        raise ValueError(f"expected n_in = {len(sys.variables)}, got {p.n_in}")
    return pi_error_of(lambda ins: evaluate(x, p, ins)[0], sys, pts, form)


def _check_form(sys: OdeSystem, form: PiErrorForm):
    if form.kind is not Form.GENERIC:
        for name in (form.u, form.v):
            if name not in sys.state:
                raise ValueError(f"{form}: {name!r} is not a state variable")


def expression_function(text: str, sys: OdeSystem) -> Callable:
    """``P(inputs)`` for a hand-written expression over the system variables."""
    ast: Node = parse_expression(text, sys.variables, allow_unknown=False)
    names = sys.variables

    def P(inputs):
        return eval_ast(ast, dict(zip(names, inputs)))

    return P


def is_constant(P: Callable, sys: OdeSystem, pts: np.ndarray, tol: float = SUPPRESS_TOL) -> bool:
    try:
        _, grads = _gradient(P, sys, pts)
    except (EvaluationError, TaylorError, ZeroDivisionError):
        return False
    m = max((float(np.max(np.abs(g))) for g in grads), default=0.0)
    # NaN partials are not evidence of a constant; let the fitness reject them
    return m < tol


def suppress_constant(x: Chromosome, p: CgpParams, sys: OdeSystem, pts: np.ndarray,
                      tol: float = SUPPRESS_TOL) -> bool:
    """True (suppress) when every state partial vanishes at every control point."""
    return is_constant(lambda ins: evaluate(x, p, ins)[0], sys, pts, tol)


@dataclass(frozen=True)
class PiSettings:
    rows: int = 1
    cols: int = 15
    levels_back: int = 16
    arity: int = 2
    kernels: tuple = PI_KERNELS
    lam: int = 10
    max_gen: int = 2000
    success_eps: float = 1e-16
    n_points: int = 50

    def params(self, n_in: int) -> CgpParams:
        return CgpParams(n_in, 1, self.rows, self.cols, self.levels_back, self.arity,
                         list(self.kernels))


@dataclass
class PiResult:
    reports: list
    ert: float = field(init=False)

    def __post_init__(self):
        self.ert = expected_run_time(self.reports)

    @property
    def verified(self) -> list:
        return [r for r in self.reports if r.success and r.extra.get("verified")]


def search_run(sys: OdeSystem, bounds: Sequence[tuple], form: PiErrorForm,
               settings: PiSettings, seed, initial: Chromosome | None = None) -> RunReport:
    form = PiErrorForm.parse(form)
    _check_form(sys, form)
    p = settings.params(len(sys.variables))
    pts = sample_points(bounds, settings.n_points, substream(seed, SETUP_STREAM))

    def fitness(x, rng):
        return pi_error(x, p, sys, pts, form)

    cfg = EvolveConfig(settings.lam, settings.max_gen, settings.success_eps, seed,
                       suppressor=lambda x: suppress_constant(x, p, sys, pts))
    names = list(sys.variables)
    rep = run(initial, p, fitness, cfg,
              describe=lambda c: expression_string(c, p, input_names=names)[0])
    if rep.success:
        # guard against integrals that only hold on the control points
        fresh = sample_points(bounds, settings.n_points, substream(seed, CHECK_STREAM))
        e = pi_error(rep.best_chromosome, p, sys, fresh, form)
        const = suppress_constant(rep.best_chromosome, p, sys, fresh)
        rep.extra["fresh_error"] = e
        rep.extra["verified"] = bool(e <= settings.success_eps and not const)
    return rep


def search_prime_integral(sys: OdeSystem, bounds: Sequence[tuple], form: PiErrorForm,
                          settings: PiSettings | None = None, runs: int = 20, seed: int = 0,
                          stop_on_success: bool = False) -> PiResult:
    """Multi-start search; run ``i`` uses seed ``(seed, i)``."""
    settings = settings or PiSettings()
    reports = run_many(lambda i: search_run(sys, bounds, form, settings, (seed, i)), runs,
                       stop_on_success)
    return PiResult(reports)


# the systems studied in the literature on this method
def mass_spring() -> tuple:
    sys = OdeSystem.from_text(["x", "v"], ["v", "-k*x"], ["k"], "MSS")
    return sys, [(2, 4), (2, 4), (2, 4)], PiErrorForm(Form.RATIO, "x", "v")


def pendulum() -> tuple:
    sys = OdeSystem.from_text(["theta", "omega"], ["omega", "-c*sin(theta)"], ["c"], "SP")
    return sys, [(-5, 5), (-5, 5), (0, 10)], PiErrorForm(Form.RATIO, "theta", "omega")


def two_body() -> tuple:
    sys = OdeSystem.from_text(
        ["r", "v", "omega", "theta"],
        ["v", "-mu/r^2 + r*omega^2", "-2*v*omega/r", "omega"],
        ["mu"], "TBP")
    return sys, [(0.1, 1.1), (2, 4), (1, 2), (2, 4), (1, 2)], PiErrorForm(Form.GENERIC)
