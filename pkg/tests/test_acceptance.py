"""Acceptance suite: one PASS/FAIL line per headline criterion.

The experiment criteria run real searches at desk scale and take tens of
minutes on one core. The extended TBP energy search only runs with
DCGP_SLOW=1.
"""
import math
import time

import numpy as np
import pytest

import conftest
import test_symreg as TS
import test_taylor as TT
from conftest import WORKED_POLY, WORKED_WEIGHT_POLY, digits3, program
from dcgp.cgp import EvaluationError, evaluate, expression_string, promote_weights
from dcgp.cli import main
from dcgp.diffeq import DE_KERNELS, de_error
from dcgp.experiment import Experiment, load, problem_dir
from dcgp.primint import Form, PiErrorForm, expression_function, pi_error_of, sample_points
from dcgp.symreg import polynomial_coefficients
from dcgp.taylor import make_variable


@pytest.fixture
def verdict(capsys):
    def report(name: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        conftest.ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return report


def passes(fn, *args) -> bool:
    try:
        fn(*args)
    except AssertionError:
        return False
    return True


def search(name: str, runs: int, accept, seed: int = 0):
    """Runs 0.. of a shipped experiment until ``accept(exp, report)`` holds."""
    exp = Experiment(load(name))
    for i in range(runs):
        rep = exp.run_one(i, seed)
        if rep.success and accept(exp, rep):
            return i, rep
    return None, None


# ---------- algebra ----------
def test_worked_algebra(verdict):
    t = time.perf_counter()
    ok = passes(TT.test_worked_division_derivatives)
    dt = time.perf_counter() - t
    verdict("worked division derivatives to 1e-12", ok and dt < 1.0, f"{dt * 1e3:.1f} ms")


def test_worked_reproduction(verdict, worked):
    t = time.perf_counter()
    x, p = worked
    text = expression_string(x, p)[0]
    (v,) = evaluate(x, p, [1.0, 1.0, 1.0])
    (poly,) = evaluate(x, p, [make_variable(n, 1.0, 2) for n in "xyz"])
    ok_in = len(poly) == len(WORKED_POLY)
    for mono, val in WORKED_POLY.items():
        alpha = {s: mono.count(s) for s in set(mono)}
        ok_in &= digits3(float(poly.coeff(alpha)), val)
    ws = promote_weights(x, p, [(3, 1), (10, 1)], 3)
    (wpoly,) = evaluate(x, p, [1.0, 1.0, 1.0], weights=ws)
    ok_w = len(wpoly) == len(WORKED_WEIGHT_POLY)
    for (i, j), val in WORKED_WEIGHT_POLY.items():
        ok_w &= digits3(float(wpoly.coeff({"w3_1": i, "w10_1": j})), val)
    dt = time.perf_counter() - t
    ok = text == "(sig(((z*y)+(y/y)))/x)" and round(v, 3) == 0.881 and ok_in and ok_w
    verdict("worked program decode, value and both expansions", ok and dt < 1.0,
            f"{text} = {v:.3f}, {dt * 1e3:.1f} ms")


def test_ad_property_suite(verdict):
    n_cases = len(list(TT.ad_cases(800))) + len(list(TT.ad_cases(200, seed=3)))
    results = {
        "derivatives": passes(TT.test_ad_matches_mpmath_univariate)
        and passes(TT.test_ad_matches_mpmath_mixed_partials),
        "field axioms": passes(TT.test_field_axioms_1000_triples),
        "truncation": passes(TT.test_truncation_consistency_exact),
    }
    bad = [k for k, v in results.items() if not v]
    verdict("AD properties: 1000 derivative cases, 1000 triples", n_cases == 1000 and not bad,
            "failing: " + ", ".join(bad) if bad else f"{n_cases} derivative cases")


def test_batch_equivalence(verdict):
    verdict("batched vs scalar evaluation over 256 points at 1e-15",
            passes(TT.test_batch_equivalence_256_points))


# ---------- symbolic regression ----------
def ephemeral_constant(exp, rep):
    """Coefficient of -x^3 in the found P1 model with its learned constant."""
    c = rep.extra["constants"]
    x = rep.best_chromosome
    model = lambda t: evaluate(x, exp.params, [t, *c])[0]  # noqa: E731
    return -float(polynomial_coefficients(model, 6, 2.0)[3])


def test_p1_ephemeral(verdict):
    i, rep = search("P1-ephemeral", 20, lambda e, r: abs(ephemeral_constant(e, r) - math.pi) < 1e-8)
    if rep is None:
        verdict("P1 ephemeral: eps < 1e-14 and |c - pi| < 1e-8 in 20 runs", False, "no run")
    exp = Experiment(load("P1-ephemeral"))
    pi_hat = ephemeral_constant(exp, rep)
    verdict("P1 ephemeral: eps < 1e-14 and |c - pi| < 1e-8 in 20 runs", True,
            f"run {i}, eps {rep.best_error:.1e}, c {rep.extra['constants'][0]!r}, "
            f"recovered {pi_hat!r}")


def test_p4_ephemeral(verdict):
    found = []
    for seed in (0, 1):
        i, rep = search("P4-ephemeral", 50, lambda e, r: True, seed=seed)
        if rep is not None:
            found = [seed, i, rep]
            break
    detail = f"seed {found[0]}, run {found[1]}: {found[2].best_expression}" if found else "0/100"
    verdict("P4 ephemeral: a success in 50 runs (two seeds)", bool(found), detail)


EXACT = {"P1-weighted": [0, 1, 0, -math.pi, 0, 1], "P5-weighted": [0, 1, 0, -math.pi, 0, math.e]}
# printed recovered constants: coefficients of x^5, x^3 and x
PRINTED_CONSTANTS = {"P1-weighted": (1.0, -3.1415926, 0.9999999), "P5-weighted": (2.7182818, -3.1415926, 1.0)}


def weighted_coefficients(exp, rep):
    x = rep.best_chromosome
    model = lambda t: evaluate(x, exp.params, [t], use_weights=True)[0]  # noqa: E731
    return polynomial_coefficients(model, 6, 2.0)


@pytest.mark.parametrize("name", ["P1-weighted", "P5-weighted"])
def test_weighted(verdict, name):
    exact = np.array(EXACT[name] + [0.0])
    table = np.array(PRINTED_CONSTANTS[name])
    # the printed values themselves sit within one printed unit of the exact constants
    assert np.all(np.abs(table - exact[[5, 3, 1]]) <= 1e-7 + 1e-12)
    close = lambda e, r: np.max(np.abs(weighted_coefficients(e, r) - exact)) < 1e-7  # noqa: E731
    i, rep = search(name, 20, close)
    if rep is None:
        verdict(f"{name}: constants within 1e-7 in 20 runs", False, "no run")
    a = [float(v) for v in weighted_coefficients(Experiment(load(name)), rep)]
    verdict(f"{name}: constants within 1e-7 in 20 runs", True,
            f"run {i}, eps {rep.best_error:.1e}, x^5 {a[5]!r}, x^3 {a[3]!r}, x {a[1]!r}")


def test_newton_exactness(verdict):
    verdict("one Newton step zeroes the gradient on 200 affine programs",
            passes(TS.test_newton_exactness_affine, np.random.default_rng(12345)))


# ---------- differential equations ----------
@pytest.mark.parametrize("name, fn", [("DE-EXP", np.exp), ("DE-TRIG", np.sin)])
def test_differential_equation(verdict, name, fn):
    pts = np.random.default_rng(4).uniform(0.0, 1.5, 20)

    def matches(exp, rep):
        try:
            (y,) = evaluate(rep.best_chromosome, exp.params, [pts])
        except EvaluationError:
            return False
        return np.max(np.abs(np.broadcast_to(y, pts.shape) - fn(pts))) <= 1e-7

    i, rep = search(name, 20, matches)
    K = list(DE_KERNELS)
    exact = program(1, K, [("-", 0, 0), ("exp" if name == "DE-EXP" else "sin", 0, 1)])
    exact_err = de_error(*exact, Experiment(load(name)).problem)
    ok = rep is not None and exact_err <= 1e-20
    detail = f"exact solution {exact_err:.1e}"
    if rep is not None:
        detail = f"run {i}, eps {rep.best_error:.1e}: {rep.best_expression}; " + detail
    verdict(f"{name}: eps <= 1e-16 in 20 runs", ok, detail)


# ---------- prime integrals ----------
def verified(exp, rep):
    return bool(rep.extra.get("verified")) and rep.extra["fresh_error"] <= 1e-16


@pytest.mark.parametrize("name, runs", [("MSS", 50), ("SP", 50), ("TBP-momentum", 20)])
def test_prime_integral_search(verdict, name, runs):
    i, rep = search(name, runs, verified)
    detail = f"run {i}: {rep.best_expression}" if rep else f"0/{runs}"
    verdict(f"{name}: verified integral within {runs} runs", rep is not None, detail)


def test_prime_integral_table(verdict):
    from test_primint import SYSTEMS, KNOWN_INTEGRALS

    generic = PiErrorForm(Form.GENERIC)
    worst = 0.0
    for name, texts in KNOWN_INTEGRALS.items():
        sys, bounds, _ = SYSTEMS[name]()
        pts = sample_points(bounds, 50, np.random.default_rng(0))
        for text in texts:
            worst = max(worst, pi_error_of(expression_function(text, sys), sys, pts, generic))
    verdict("hand-encoded integral table verifies to 1e-18", worst <= 1e-18, f"worst {worst:.1e}")


@pytest.mark.slow
def test_tbp_energy_extended(verdict):
    i, rep = search("TBP-energy", 1000, verified)
    verdict("TBP-energy: verified integral within 1000 runs", rep is not None,
            f"run {i}: {rep.best_expression}" if rep else "none")


# ---------- determinism ----------
def test_determinism_across_jobs(verdict, tmp_path, capsys):
    names = sorted(p.stem for p in problem_dir().glob("*.yaml") if p.stem != "worked-example")
    differ = []
    for name in names:
        files = []
        for jobs in ("1", "2"):
            out = tmp_path / f"{name}-{jobs}.jsonl"
            main(["run", name, "--runs", "2", "--g-max", "8", "--jobs", jobs, "--out", str(out)])
            files.append(out.read_bytes())
        if files[0] != files[1]:
            differ.append(name)
    capsys.readouterr()
    verdict("byte-identical results for --jobs 1 and 2", not differ,
            f"{len(names)} experiments" + (f", differ: {differ}" if differ else ""))
