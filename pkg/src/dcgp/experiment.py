"""Experiment configs (YAML) and the per-run drivers behind the CLI.

A config is a mapping with a ``mode`` key (symreg-ephemeral, symreg-weighted,
diffeq or primint), a ``cgp`` block (r, c, l, a, kernels), an ``es`` block
(lambda, g_max, eps) and mode-specific problem keys; see the files under
``dcgp/problems``. Run ``i`` of an experiment with seed ``s`` draws all its
randomness from substreams of ``(s, i)``, so a record depends only on the
config, the seed and the run index.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import primint, symreg
from .cgp import CgpParams, Chromosome, expression_string, validate
from .diffeq import (
    BoundaryCondition,
    DeProblem,
    DeSettings,
    de_error,
    grid,
    parse_residual,
    random_points,
)
from .diffeq import parser as P
from .diffeq.problem import solve_run
from .evolve import SETUP_STREAM, EvolveConfig, RunReport, expected_run_time, run, substream

MODES = ("symreg-ephemeral", "symreg-weighted", "diffeq", "primint")


class ConfigError(ValueError):
    pass


def problem_dir() -> Path:
    return Path(str(resources.files("dcgp") / "problems"))


def resolve(path: str | Path) -> Path:
    """A config path, falling back to the shipped ``problems`` tree."""
    p = Path(path)
    if p.exists():
        return p
    for cand in (problem_dir() / p, problem_dir() / f"{p}.yaml"):
        if cand.exists():
            return cand
    raise ConfigError(f"config file not found: {path}")


def load(path: str | Path) -> dict:
    p = resolve(path)
    try:
        cfg = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{p}: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"{p}: expected a mapping at the top level")
    cfg.setdefault("name", p.stem)
    check(cfg)
    return cfg


def _req(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing key {key!r}")
    return cfg[key]


def check(cfg: dict) -> None:
    """Build every object of the config once so errors surface before any run."""
    mode = _req(cfg, "mode")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    if int(cfg.get("runs", 1)) < 1:
        raise ConfigError("runs must be >= 1")
    try:
        Experiment(cfg)
    except ConfigError:
        raise
    except P.ParseError as e:
        raise ConfigError(str(e)) from e
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{type(e).__name__}: {e}") from e


def apply_overrides(cfg: dict, **over) -> dict:
    """Copy of ``cfg`` with CGP / ES overrides (None leaves a value alone)."""
    cfg = copy.deepcopy(cfg)
    cgp, es = cfg.setdefault("cgp", {}), cfg.setdefault("es", {})
    for key, dst, name in (("rows", cgp, "r"), ("cols", cgp, "c"), ("levels_back", cgp, "l"),
                           ("arity", cgp, "a"), ("kernels", cgp, "kernels"),
                           ("lam", es, "lambda"), ("max_gen", es, "g_max"), ("eps", es, "eps")):
        if over.get(key) is not None:
            dst[name] = over[key]
    for key in ("runs", "seed"):
        if over.get(key) is not None:
            cfg[key] = over[key]
    return cfg


def _bounds(b, n_vars: int) -> list:
    if n_vars == 1 and len(b) == 2 and not isinstance(b[0], (list, tuple)):
        return [(float(b[0]), float(b[1]))]
    if isinstance(b, dict):
        raise ConfigError("bounds must be a list here")
    return [(float(lo), float(hi)) for lo, hi in b]


class Experiment:
    """Parsed config: problem objects plus CGP and ES settings."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.mode = cfg["mode"]
        self.name = cfg.get("name", "")
        cgp = cfg.get("cgp", {})
        es = cfg.get("es", {})
        self.rows = int(cgp.get("r", 1))
        self.cols = int(cgp.get("c", 15))
        self.levels_back = int(cgp.get("l", 16))
        self.arity = int(cgp.get("a", 2))
        default_lam = 4 if self.mode.startswith("symreg") else 10
        self.lam = int(es.get("lambda", default_lam))
        self.max_gen = int(es.get("g_max", 1000 if self.mode.startswith("symreg") else 2000))
        self.eps = float(es.get("eps", 1e-14 if self.mode.startswith("symreg") else 1e-16))
        getattr(self, "_init_" + self.mode.replace("-", "_"))(cfg, cgp)
        self.initial = None
        if "initial" in cfg:
            self.initial = Chromosome.from_dict(cfg["initial"])
            if not self.initial.weights:
                self.initial = Chromosome.unweighted(self.initial.genes, self.params)
            bad = validate(self.initial, self.params)
            if bad:
                raise ConfigError("initial chromosome: " + "; ".join(map(str, bad)))

    def _make_params(self, n_in: int, kernels) -> CgpParams:
        return CgpParams(n_in, 1, self.rows, self.cols, self.levels_back, self.arity, list(kernels))

    # ---------- modes ----------
    def _init_symreg(self, cfg, cgp):
        self.variables = tuple(cfg.get("variables", ["x"]))
        target = P.parse_expression(_req(cfg, "target"), self.variables, allow_unknown=False)
        bounds = _bounds(_req(cfg, "bounds"), len(self.variables))
        n = int(cfg.get("points", 10))
        axes = [symreg.make_grid(lo, hi, n) for lo, hi in bounds]
        pts = np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T
        env = {v: pts[:, j] for j, v in enumerate(self.variables)}
        y = np.broadcast_to(np.asarray(P.evaluate(target, env), dtype=float), (pts.shape[0],))
        self.data = symreg.Dataset(pts, y)
        self.kernels = tuple(cgp.get("kernels", ["+", "-", "*", "/"]))

    def _init_symreg_ephemeral(self, cfg, cgp):
        self._init_symreg(cfg, cgp)
        self.n_const = int(cfg.get("constants", 1))
        if self.n_const < 1:
            raise ConfigError("constants must be >= 1")
        learn = cfg.get("learning", {})
        self.gd_steps = int(learn.get("gd_steps", 5))
        self.lr = float(learn.get("lr", 0.05))
        self.const_init = tuple(float(v) for v in learn.get("init", (-1.0, 1.0)))
        self.params = self._make_params(len(self.variables) + self.n_const, self.kernels)
        cn = ["c"] if self.n_const == 1 else [f"c{i + 1}" for i in range(self.n_const)]
        self.input_names = list(self.variables) + cn

    def _init_symreg_weighted(self, cfg, cgp):
        self._init_symreg(cfg, cgp)
        learn = cfg.get("learning", {})
        self.n_iter = int(learn.get("n_iter", 100))
        self.subset_sizes = tuple(int(k) for k in learn.get("n_w", (2, 3)))
        self.params = self._make_params(len(self.variables), self.kernels)
        self.input_names = list(self.variables)

    def _init_diffeq(self, cfg, cgp):
        self.variables = tuple(_req(cfg, "variables"))
        domain = _bounds(_req(cfg, "domain"), len(self.variables))
        interior = cfg.get("interior", {"grid": [10] * len(self.variables)})
        if "grid" in interior:
            pts = grid(domain, interior["grid"], interior=True)
        else:
            pts = random_points(domain, int(interior["random"]),
                                substream(int(interior.get("seed", 0)), SETUP_STREAM))
        residual = parse_residual(_req(cfg, "residual"), self.variables)
        bcs = []
        for b in cfg.get("boundary", []):
            orders = tuple(sorted((str(k), int(v)) for k, v in b.get("diff", {}).items()))
            bcs.append(BoundaryCondition(tuple(float(t) for t in b["point"]), float(b["value"]), orders))
        self.problem = DeProblem(self.variables, residual, pts, tuple(bcs),
                                 float(cfg.get("penalty", 1.0)), self.name)
        self.kernels = tuple(cgp.get("kernels", ["+", "-", "*", "/", "sin", "cos", "log", "exp"]))
        self.params = self._make_params(len(self.variables), self.kernels)
        self.input_names = list(self.variables)

    def _init_primint(self, cfg, cgp):
        state = list(_req(cfg, "state"))
        params = list(cfg.get("params", []))
        self.system = primint.OdeSystem.from_text(state, _req(cfg, "rhs"), params, self.name)
        b = _req(cfg, "bounds")
        if not isinstance(b, dict):
            raise ConfigError("primint bounds must map each variable to [lo, hi]")
        self.bounds = [(float(b[v][0]), float(b[v][1])) for v in self.system.variables]
        self.form = primint.PiErrorForm.parse(cfg.get("form", "generic"))
        primint._check_form(self.system, self.form)
        self.n_points = int(cfg.get("points", 50))
        self.kernels = tuple(cgp.get("kernels", list(primint.PI_KERNELS)))
        self.params = self._make_params(len(self.system.variables), self.kernels)
        self.input_names = list(self.system.variables)

    # ---------- running ----------
    def evolve_config(self, seed, suppressor=None) -> EvolveConfig:
        return EvolveConfig(self.lam, self.max_gen, self.eps, seed, suppressor)

    def describe(self, x: Chromosome) -> str:
        return expression_string(x, self.params, input_names=self.input_names)[0]

    def run_one(self, index: int, seed: int) -> RunReport:
        s = (int(seed), int(index))
        if self.mode == "symreg-ephemeral":
            lo, hi = self.const_init
            state = symreg.ConstState(substream(s, SETUP_STREAM).uniform(lo, hi, self.n_const))
            fit = symreg.EphemeralFitness(self.params, self.data, state, self.gd_steps, self.lr)
            rep = run(self.initial, self.params, fit, self.evolve_config(s), self.describe)
            rep.extra["constants"] = [float(c) for c in state.values]
            return rep
        if self.mode == "symreg-weighted":
            fit = symreg.WeightedFitness(self.params, self.data, self.n_iter, self.subset_sizes)
            rep = run(self.initial, self.params, fit, self.evolve_config(s), self.describe)
            rep.extra["weighted_expression"] = expression_string(
                rep.best_chromosome, self.params, True, self.input_names, weight_values=True)[0]
            return rep
        if self.mode == "diffeq":
            st = DeSettings(self.rows, self.cols, self.levels_back, self.arity, self.kernels,
                            self.lam, self.max_gen, self.eps)
            if self.initial is not None:
                prob = self.problem
                return run(self.initial, self.params, lambda x, rng: de_error(x, self.params, prob),
                           self.evolve_config(s), self.describe)
            return solve_run(self.problem, st, s)
        st = primint.PiSettings(self.rows, self.cols, self.levels_back, self.arity, self.kernels,
                                self.lam, self.max_gen, self.eps, self.n_points)
        return primint.search_run(self.system, self.bounds, self.form, st, s, initial=self.initial)


def run_record(cfg: dict, index: int, seed: int) -> dict:
    """One run as a JSON-ready record (picklable entry point for worker processes)."""
    rep = Experiment(cfg).run_one(index, seed)
    rec = rep.to_record(index)
    rec["name"] = cfg.get("name", "")
    rec["seed"] = int(seed)
    return rec


def summary_record(cfg: dict, records: list, seed: int) -> dict:
    reports = [RunReport.from_record(r) for r in records]
    ert = expected_run_time(reports) if reports else math.inf
    ok = [r for r in records if r["success"]]
    best = min(records, key=lambda r: r["best_error"]) if records else None
    return {
        "summary": True,
        "name": cfg.get("name", ""),
        "mode": cfg["mode"],
        "seed": int(seed),
        "runs": len(records),
        "successes": len(ok),
        "fevals": sum(r["fevals"] for r in records),
        "ert": ert if math.isfinite(ert) else None,
        "best_error": best["best_error"] if best else None,
        "best_expression": best["expression"] if best else "",
    }


@dataclass
class Outcome:
    records: list
    summary: dict


def run_experiment(cfg: dict, runs: int | None = None, seed: int | None = None, jobs: int = 1,
                   stop_on_success: bool = False) -> Outcome:
    """All runs of ``cfg`` in run-index order, optionally over ``jobs`` processes."""
    runs = int(runs if runs is not None else cfg.get("runs", 1))
    seed = int(seed if seed is not None else cfg.get("seed", 0))
    records: list = []
    if jobs <= 1:
        for i in range(runs):
            records.append(run_record(cfg, i, seed))
            if stop_on_success and records[-1]["success"]:
                break
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            start = 0
            while start < runs:
                idx = list(range(start, min(runs, start + jobs)))
                records.extend(pool.map(run_record, [cfg] * len(idx), idx, [seed] * len(idx)))
                start += len(idx)
                if stop_on_success and any(r["success"] for r in records):
                    break
        if stop_on_success:
            first = next((i for i, r in enumerate(records) if r["success"]), None)
            if first is not None:
                records = records[:first + 1]
    return Outcome(records, summary_record(cfg, records, seed))


def _jsonable(v: Any):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    return v


def to_json_line(rec: dict) -> str:
    return json.dumps(_jsonable(rec), sort_keys=True)


def from_json_line(line: str) -> dict:
    rec = json.loads(line)
    for k in ("best_error", "fresh_error"):
        if rec.get(k) in ("inf", "-inf"):
            rec[k] = float(rec[k])
    return rec
