"""Command line: ``dcgp run | eval | ert``.

Exit codes: 0 success found (or eval ok), 1 no success, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import experiment as X
from .cgp import (
    CgpParams,
    Chromosome,
    InactiveWeight,
    EvaluationError,
    default_input_names,
    evaluate,
    expression_string,
    promote_weights,
    validate,
)
from .evolve import RunReport, expected_run_time
from .taylor import GDual, make_variable, render

EXIT_OK, EXIT_NO_SUCCESS, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"dcgp: error: {msg}", file=sys.stderr)


# ---------- run ----------
def cmd_run(args) -> int:
    cfg = X.load(args.config)
    cfg = X.apply_overrides(
        cfg, rows=args.rows, cols=args.cols, levels_back=args.levels_back, arity=args.arity,
        kernels=args.kernels.split(",") if args.kernels else None, lam=args.lam,
        max_gen=args.g_max, eps=args.eps, runs=args.runs, seed=args.seed)
    X.check(cfg)
    runs = int(cfg.get("runs", 1))
    seed = int(cfg.get("seed", 0))
    t0 = time.perf_counter()
    out = X.run_experiment(cfg, runs, seed, jobs=args.jobs, stop_on_success=args.stop_on_success)
    wall = time.perf_counter() - t0
    lines = [X.to_json_line(r) for r in out.records] + [X.to_json_line(out.summary)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    s = out.summary
    ert = "inf" if s["ert"] is None else f"{s['ert']:.1f}"
    # wall time goes to the console only, so result files stay byte-identical
    print(f"{s['name']}: {s['successes']}/{s['runs']} successful, ERT {ert}, "
          f"best {s['best_expression']} (error {s['best_error']}), wall {wall:.2f}s",
          file=sys.stderr)
    return EXIT_OK if s["successes"] > 0 else EXIT_NO_SUCCESS


# ---------- eval ----------
def _load_program(path: str):
    try:
        d = yaml.safe_load(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise UsageError(f"{path}: {e}") from e
    if not isinstance(d, dict) or "genes" not in d:
        raise UsageError(f"{path}: expected a mapping with 'genes'")
    c = d.get("cgp", {})
    try:
        p = CgpParams(int(c["n_in"]), int(c.get("n_out", 1)), int(c.get("r", 1)), int(c["c"]),
                      int(c.get("l", c["c"])), int(c.get("a", 2)), list(c["kernels"]))
    except KeyError as e:
        raise UsageError(f"{path}: cgp block is missing {e}") from e
    except ValueError as e:
        raise UsageError(f"{path}: {e}") from e
    x = Chromosome.from_dict(d)
    if not x.weights:
        x = Chromosome.unweighted(x.genes, p)
    names = d.get("input_names") or default_input_names(p.n_in)
    return x, p, list(names)


def _parse_promote(items) -> list:
    out = []
    for it in items or []:
        node, _, slot = it.partition(":")
        try:
            out.append((int(node), int(slot)))
        except ValueError:
            raise UsageError(f"bad --promote-weight {it!r}; expected NODE:SLOT") from None
    return out


def _fmt_value(v) -> str:
    if isinstance(v, np.ndarray):
        return "[" + ", ".join(repr(float(t)) for t in v) + "]"
    return repr(float(v))


def cmd_eval(args) -> int:
    x, p, names = _load_program(args.program)
    bad = validate(x, p)
    if bad:
        for v in bad:
            _err(f"invalid chromosome: {v}")
        return EXIT_USAGE
    try:
        point = [float(t) for t in args.inputs.split(",")] if args.inputs else [1.0] * p.n_in
    except ValueError:
        raise UsageError(f"bad --inputs {args.inputs!r}") from None
    if len(point) != p.n_in:
        raise UsageError(f"expected {p.n_in} inputs, got {len(point)}")
    which = _parse_promote(args.promote_weight)
    weighted = bool(which) or args.weighted
    if which:
        try:
            ws = promote_weights(x, p, which, max(args.order, 1))
        except InactiveWeight as e:
            raise UsageError(str(e)) from e
    for i, s in enumerate(expression_string(x, p, weighted, names)):
        print(f"expression[{i}]: {s}")
    try:
        values = evaluate(x, p, point, use_weights=weighted)
        for i, v in enumerate(values):
            print(f"value[{i}]: {_fmt_value(v)}")
        if args.order > 0:
            if which:
                polys = evaluate(x, p, point, weights=ws)
            else:
                ins = [make_variable(n, v, args.order) for n, v in zip(names, point)]
                polys = evaluate(x, p, ins, use_weights=weighted)
            for i, q in enumerate(polys):
                text = render(q, args.digits) if isinstance(q, GDual) else _fmt_value(q)
                print(f"polynomial[{i}]: {text}")
    except EvaluationError as e:
        _err(str(e))
        return EXIT_NO_SUCCESS
    return EXIT_OK


# ---------- ert ----------
def cmd_ert(args) -> int:
    reports = []
    for f in args.files:
        try:
            lines = Path(f).read_text().splitlines()
        except OSError as e:
            raise UsageError(f"cannot read {f}: {e}") from e
        for n, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                rec = X.from_json_line(line)
            except ValueError as e:
                raise UsageError(f"{f}:{n}: {e}") from e
            if not rec.get("summary"):
                reports.append(RunReport.from_record(rec))
    if not reports:
        raise UsageError("no run records found")
    ert = expected_run_time(reports)
    n_s = sum(r.success for r in reports)
    print(f"runs: {len(reports)}")
    print(f"successes: {n_s}")
    print(f"fevals: {sum(r.fevals for r in reports)}")
    print(f"ERT: {ert:.1f}" if math.isfinite(ert) else "ERT: inf")
    return EXIT_OK if n_s else EXIT_NO_SUCCESS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dcgp", description="Differentiable Cartesian GP experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a config for a number of seeded runs")
    r.add_argument("config", help="config file, or the name of a shipped problem (e.g. P1-ephemeral)")
    r.add_argument("--runs", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    r.add_argument("--out", help="write records here instead of stdout")
    r.add_argument("--stop-on-success", action="store_true", help="stop after the first success")
    r.add_argument("--rows", "-r", type=int)
    r.add_argument("--cols", "-c", type=int)
    r.add_argument("--levels-back", "-l", type=int)
    r.add_argument("--arity", "-a", type=int)
    r.add_argument("--kernels", help="comma-separated kernel list")
    r.add_argument("--lambda", dest="lam", type=int)
    r.add_argument("--g-max", type=int)
    r.add_argument("--eps", type=float)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="decode and evaluate a chromosome")
    e.add_argument("program", help="YAML file with cgp, genes and optional weights")
    e.add_argument("--inputs", help="comma-separated input point (default all ones)")
    e.add_argument("--order", type=int, default=0, help="truncation order of the output polynomial")
    e.add_argument("--promote-weight", action="append", metavar="NODE:SLOT",
                   help="expand in this weight instead of the inputs (repeatable)")
    e.add_argument("--weighted", action="store_true", help="apply the chromosome weights")
    e.add_argument("--digits", type=int, default=6)
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("ert", help="aggregate run records into an expected run time")
    t.add_argument("files", nargs="+")
    t.set_defaults(func=cmd_ert)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        _err("--jobs must be >= 1")
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, X.ConfigError) as e:
        _err(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
