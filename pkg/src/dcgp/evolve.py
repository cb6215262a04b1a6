"""(1+λ) evolution strategy over CGP chromosomes.

Mutant ``i`` of every generation (``i = 1..λ``) mutates ``i`` active genes of
the parent. A mutant replaces the parent when its error is not worse, so
neutral drift through inactive genes works as usual in CGP. Every random draw
comes from a substream keyed by ``(seed, generation, mutant index)``, so a
run is reproducible independently of how offspring are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .cgp import CgpParams, Chromosome, EvaluationError, expression_string, mutate_active
from .cgp import random_chromosome
from .taylor import TaylorError

_INIT_STREAM = 0
_INIT_FITNESS_STREAM = 1
_OFFSPRING_STREAM = 2
# streams for the problem layer (initial constants, control points, checks)
SETUP_STREAM = 3
CHECK_STREAM = 4
_MAX_INIT_DRAWS = 1000


def substream(seed, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under ``seed`` (an int or tuple of ints)."""
    entropy = list(seed) if isinstance(seed, (tuple, list)) else seed
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=tuple(key)))


@dataclass(frozen=True)
class EvolveConfig:
    lam: int = 4
    max_gen: int = 1000
    success_eps: float = 1e-14
    seed: Any = 0
    suppressor: Callable[[Chromosome], bool] | None = None

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError("lambda must be >= 1")
        if self.max_gen < 1:
            raise ValueError("max_gen must be >= 1")
        if not self.success_eps > 0:
            raise ValueError("success_eps must be > 0")


@dataclass
class Evaluation:
    """Outcome of one fitness call.

    ``chromosome`` replaces the evaluated one if selected (e.g. with learned
    weights); ``state`` is handed to ``fitness.commit`` when selected.
    """

    error: float
    chromosome: Chromosome | None = None
    state: Any = None


@dataclass
class RunReport:
    success: bool
    generations: int
    fevals: int
    best_error: float
    best_chromosome: Chromosome
    best_expression: str = ""
    screen_evals: int = 0
    trace: list = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    def to_record(self, run: int | None = None) -> dict:
        rec = {} if run is None else {"run": run}
        rec.update({
            "success": self.success,
            "generations": self.generations,
            "fevals": self.fevals,
            "screen_evals": self.screen_evals,
            "best_error": self.best_error,
            "expression": self.best_expression,
            "chromosome": self.best_chromosome.to_dict(),
        })
        rec.update(self.extra)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "RunReport":
        known = {"run", "success", "generations", "fevals", "screen_evals", "best_error",
                 "expression", "chromosome"}
        return cls(
            success=bool(rec["success"]),
            generations=int(rec["generations"]),
            fevals=int(rec["fevals"]),
            best_error=float(rec["best_error"]),
            best_chromosome=Chromosome.from_dict(rec["chromosome"]),
            best_expression=rec.get("expression", ""),
            screen_evals=int(rec.get("screen_evals", 0)),
            extra={k: v for k, v in rec.items() if k not in known},
        )


def _score(fitness, chrom: Chromosome, rng) -> Evaluation:
    try:
        out = fitness(chrom, rng)
    except (EvaluationError, TaylorError, ZeroDivisionError, FloatingPointError, OverflowError):
        return Evaluation(math.inf)
    if not isinstance(out, Evaluation):
        out = Evaluation(float(out))
    err = float(out.error)
    if not math.isfinite(err) or err < 0:
        out.error = math.inf
    else:
        out.error = err
    return out


def _suppressed(suppressor, chrom) -> bool:
    try:
        return bool(suppressor(chrom))
    except (EvaluationError, TaylorError, ZeroDivisionError, FloatingPointError, OverflowError):
        return False


def run(initial: Chromosome | None, params: CgpParams, fitness: Callable, cfg: EvolveConfig,
        describe: Callable[[Chromosome], str] | None = None) -> RunReport:
    """One (1+λ)-ES run.

    ``fitness(chromosome, rng)`` returns an error (or an :class:`Evaluation`);
    failures map to +inf. ``initial=None`` samples a random valid chromosome,
    redrawn while the suppressor rejects it.
    """
    screen = 0
    if initial is None:
        rng = substream(cfg.seed, _INIT_STREAM)
        initial = random_chromosome(params, rng)
        if cfg.suppressor is not None:
            for _ in range(_MAX_INIT_DRAWS):
                screen += 1
                if not _suppressed(cfg.suppressor, initial):
                    break
                initial = random_chromosome(params, rng)
    parent = initial
    current = _score(fitness, parent, substream(cfg.seed, _INIT_FITNESS_STREAM))
    if current.chromosome is not None:
        parent = current.chromosome
    if current.state is not None and hasattr(fitness, "commit"):
        fitness.commit(current.state)
    fevals = 1
    trace = [current.error]
    gen = 0
    while current.error > cfg.success_eps and gen < cfg.max_gen:
        gen += 1
        best = best_child = None
        for i in range(1, cfg.lam + 1):
            rng = substream(cfg.seed, _OFFSPRING_STREAM, gen, i)
            child = mutate_active(parent, params, i, rng)
            if cfg.suppressor is not None:
                screen += 1
                if _suppressed(cfg.suppressor, child):
                    continue
            ev = _score(fitness, child, rng)
            fevals += 1
            if best is None or ev.error < best.error:
                best, best_child = ev, child
        if best is not None and best.error <= current.error:
            parent = best.chromosome if best.chromosome is not None else best_child
            current = best
            if best.state is not None and hasattr(fitness, "commit"):
                fitness.commit(best.state)
        trace.append(current.error)
    if describe is None:
        def describe(c):
            return expression_string(c, params)[0]
    return RunReport(
        success=current.error <= cfg.success_eps,
        generations=gen,
        fevals=fevals,
        best_error=current.error,
        best_chromosome=parent,
        best_expression=describe(parent),
        screen_evals=screen,
        trace=trace,
    )


def expected_run_time(reports: Sequence[RunReport]) -> float:
    """Total fitness evaluations over all runs divided by the number of successes."""
    if not reports:
        raise ValueError("need at least one run report")
    n_s = sum(1 for r in reports if r.success)
    if n_s == 0:
        return math.inf
    return sum(r.fevals for r in reports) / n_s


def run_many(one_run: Callable[[int], RunReport], runs: int,
             stop_on_success: bool = False) -> list[RunReport]:
    """Run indices ``0..runs-1`` in order; optionally stop at the first success."""
    out = []
    for i in range(runs):
        rep = one_run(i)
        out.append(rep)
        if stop_on_success and rep.success:
            break
    return out
