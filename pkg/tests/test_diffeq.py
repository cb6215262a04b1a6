import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcgp.cgp import CgpParams, EvaluationError, evaluate, expression_string, random_chromosome
from dcgp.diffeq import (
    DE_KERNELS,
    BoundaryCondition,
    ExpressionSyntaxError,
    UnknownIdentifier,
    UnsupportedOrder,
    boundary_violations,
    de_error,
    grid,
    make_problem,
    parse_expression,
    parse_residual,
    render,
    residuals,
)
from dcgp.diffeq.parser import BinOp, Call, Const, Deriv, Neg, Num, Unknown, Var
from dcgp.diffeq.parser import evaluate as ev
from dcgp.taylor import derivative, make_variable

from conftest import program

K = list(DE_KERNELS)


def exp_program():
    # exp(x + (x - x))
    return program(1, K, [("-", 0, 0), ("exp", 0, 1)])


def sin_program():
    return program(1, K, [("-", 0, 0), ("sin", 0, 1)])


def de_exp():
    return make_problem(["x"], "diff(S, x, 1) - S", grid([(0, 1)], [10]),
                        [BoundaryCondition((0.0,), 1.0)])


# ---------- parser ----------
def test_parse_examples():
    assert parse_residual("diff(S,x,1) - S", ["x"]).ast == BinOp("-", Deriv((("x", 1),)), Unknown())
    lap = parse_residual("diff(S,x,2) + diff(S,y,2)", ["x", "y"])
    assert lap.ast == BinOp("+", Deriv((("x", 2),)), Deriv((("y", 2),)))
    mixed = parse_residual("diff(S,x,1,y,1) - 1", ["x", "y"])
    assert mixed.ast == BinOp("-", Deriv((("x", 1), ("y", 1))), Num(1.0))
    assert mixed.order_required == 2 and lap.order_required == 2


def test_precedence():
    v = ["x"]
    assert parse_expression("-x^2", v) == Neg(BinOp("^", Var("x"), Num(2.0)))
    assert parse_expression("2^3^2", v) == BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))
    assert parse_expression("1-2-3", v) == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))
    assert parse_expression("x*2+pi/e", v) == BinOp("+", BinOp("*", Var("x"), Num(2.0)),
                                                    BinOp("/", Const("pi"), Const("e")))
    assert parse_expression("diff(S, x)", v) == Deriv((("x", 1),))
    assert ev(parse_expression("2^3^2", v), {}) == 512.0
    assert ev(parse_expression("-2^2", v), {}) == -4.0


@pytest.mark.parametrize("text, cls, line, column", [
    ("diff(S,x,1) - * S", ExpressionSyntaxError, 1, 15),
    ("x + foo(x)", UnknownIdentifier, 1, 5),
    ("x +\n  q", UnknownIdentifier, 2, 3),
    ("diff(S, z, 1)", UnknownIdentifier, 1, 9),
    ("diff(S, x, 1.5)", UnsupportedOrder, 1, 12),
    ("(x + 1", ExpressionSyntaxError, 1, 7),
    ("x # 2", ExpressionSyntaxError, 1, 3),
    ("", ExpressionSyntaxError, 1, 1),
])
def test_parse_errors_have_position(text, cls, line, column):
    with pytest.raises(cls) as e:
        parse_residual(text, ["x"])
    assert (e.value.line, e.value.column) == (line, column)
    assert f"line {line}, column {column}" in str(e.value)


def test_max_order():
    with pytest.raises(UnsupportedOrder):
        parse_residual("diff(S, x, 3)", ["x"], max_order=2)
    assert parse_residual("diff(S, x, 2)", ["x"], max_order=2).order_required == 2


def test_unknown_disallowed_in_rhs():
    with pytest.raises(UnknownIdentifier):
        parse_expression("S + x", ["x"], allow_unknown=False)


VARS = ["x", "y"]


def asts():
    leaves = st.one_of(
        st.floats(0, 1e6, allow_nan=False).map(Num),
        st.sampled_from([Const("pi"), Const("e"), Var("x"), Var("y"), Unknown()]),
        st.sampled_from([Deriv((("x", 1),)), Deriv((("x", 2),)), Deriv((("x", 1), ("y", 2)))]),
    )

    def extend(child):
        return st.one_of(
            child.map(Neg),
            st.tuples(st.sampled_from("+-*/^"), child, child).map(lambda t: BinOp(*t)),
            st.tuples(st.sampled_from(["sin", "cos", "exp", "log", "sqrt", "abs"]), child)
            .map(lambda t: Call(*t)),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(asts())
def test_render_round_trip(ast):
    assert parse_expression(render(ast), VARS) == ast


# ---------- de_error ----------
def test_exp_solution_scores_zero():
    x, p = exp_program()
    assert expression_string(x, p)[0] == "exp((x+(x-x)))"
    assert de_error(x, p, de_exp()) == 0.0


def test_square_scores_by_hand():
    x, p = program(1, K, [("*", 0, 0)])
    prob = de_exp()
    pts = prob.interior[:, 0]
    expect = math.fsum((2 * t - t * t) ** 2 for t in pts) + 1.0 * (0.0 - 1.0) ** 2
    assert math.isclose(de_error(x, p, prob), expect, rel_tol=1e-14)
    prob3 = make_problem(["x"], "diff(S, x, 1) - S", prob.interior,
                         [BoundaryCondition((0.0,), 1.0)], penalty=3.0)
    assert math.isclose(de_error(x, p, prob3), expect + 2.0, rel_tol=1e-14)


def test_zero_residual_no_boundary():
    x, p = program(1, K, [("sin", 0, 0)])
    prob = make_problem(["x"], "S - S", grid([(0, 1)], [5]))
    assert de_error(x, p, prob) == 0.0


def test_exact_solutions():
    pi2 = math.pi / 2
    trig = make_problem(["x"], "diff(S, x, 2) + S", grid([(0, pi2)], [10]),
                        [BoundaryCondition((0.0,), 0.0), BoundaryCondition((pi2,), 1.0)])
    x, p = sin_program()
    assert de_error(x, p, trig) <= 1e-20

    # S = x^2 + y^2 solves S_xx + S_yy = 4 and matches it on the boundary
    sq = program(2, K, [("*", 0, 0), ("*", 1, 1), ("+", 2, 3)])
    bnd = [BoundaryCondition((a, b), a * a + b * b) for a, b in [(0, 0), (1, 0), (0.5, 1), (0, 0.5)]]
    poisson = make_problem(["x", "y"], "diff(S, x, 2) + diff(S, y, 2) - 4",
                           grid([(0, 1), (0, 1)], [4, 4]), bnd)
    assert de_error(*sq, poisson) <= 1e-20

    # mixed derivative: S = x*y has S_xy = 1
    xy = program(2, K, [("*", 0, 1)])
    mixed = make_problem(["x", "y"], "diff(S, x, 1, y, 1) - 1", grid([(0, 1), (0, 1)], [3, 3]))
    assert de_error(*xy, mixed) <= 1e-20

    # log(x) solves x S'' + S' = 0 on [1, 2] with S(1) = 0
    lg = program(1, K, [("-", 0, 0), ("log", 0, 1)])
    euler = make_problem(["x"], "x * diff(S, x, 2) + diff(S, x, 1)", grid([(1, 2)], [10]),
                         [BoundaryCondition((1.0,), 0.0)])
    assert de_error(*lg, euler) <= 1e-20


def test_shipped_exact_solutions():
    from dcgp.experiment import Experiment, load

    for name, prog in [("DE-EXP", exp_program()), ("DE-TRIG", sin_program()),
                       ("PDE-POISSON", program(2, K, [("*", 0, 0), ("*", 1, 1), ("+", 2, 3)]))]:
        exp = Experiment(load(name))
        assert de_error(prog[0], prog[1], exp.problem) <= 1e-20, name


def test_evaluation_failure_is_infinite():
    x, p = program(1, K, [("-", 0, 0), ("/", 0, 1)])
    assert de_error(x, p, de_exp()) == math.inf


def test_input_count_checked():
    x, p = program(2, K, [("*", 0, 1)])
    with pytest.raises(ValueError):
        de_error(x, p, de_exp())


def test_permutation_invariance(rng):
    p = CgpParams(1, 1, 1, 10, 10, 2, K)
    prob = make_problem(["x"], "diff(S, x, 2) + S*diff(S, x, 1) - x", rng.uniform(0.1, 2, (12, 1)),
                        [BoundaryCondition((0.5,), 1.0)])
    done = 0
    while done < 50:
        x = random_chromosome(p, rng)
        e = de_error(x, p, prob)
        if not math.isfinite(e):
            continue
        perm = make_problem(["x"], prob.residual.text, prob.interior[rng.permutation(12)],
                            prob.boundary)
        assert math.isclose(de_error(x, p, perm), e, rel_tol=1e-12)
        r = residuals(x, p, prob)
        idx = rng.permutation(12)
        rp = residuals(x, p, make_problem(["x"], prob.residual.text, prob.interior[idx]))
        assert np.array_equal(rp, r[idx])
        done += 1


MP = {"sin": mpmath.sin, "cos": mpmath.cos, "exp": mpmath.exp, "log": mpmath.log}


@pytest.mark.parametrize("k", [1, 2, 3])
def test_derivatives_match_high_precision_fd(rng, k):
    p = CgpParams(1, 1, 1, 8, 8, 2, K)
    mpmath.mp.dps = 40
    done = 0
    while done < 40:
        x = random_chromosome(p, rng)
        text = expression_string(x, p)[0]
        if "x" not in text:
            continue
        x0 = float(rng.uniform(0.3, 2.0))
        try:
            (out,) = evaluate(x, p, [make_variable("x", x0, k)])
        except EvaluationError:
            continue
        if not hasattr(out, "terms"):
            continue
        got = derivative(out, {"x": k})

        def f(t):
            return eval(text, {"__builtins__": {}}, {**MP, "x": t})

        try:
            ref = mpmath.diff(f, mpmath.mpf(x0), k)
        except (ZeroDivisionError, ValueError):
            continue
        if isinstance(ref, mpmath.mpc) or not math.isfinite(got) or not mpmath.isfinite(ref):
            continue
        ref = float(ref)
        assert abs(got - ref) <= 1e-5 * max(abs(ref), 1e-8), (text, x0, got, ref)
        done += 1


def test_neumann_condition():
    x, p = program(1, K, [("*", 0, 0)])  # S = x^2, S'(1) = 2
    prob = make_problem(["x"], "S - S", grid([(0, 1)], [3]),
                        [BoundaryCondition((1.0,), 2.0, (("x", 1),)),
                         BoundaryCondition((1.0,), 3.0, (("x", 1),)),
                         BoundaryCondition((1.0,), 1.0, (("x", 2),))])
    assert list(boundary_violations(x, p, prob)) == [0.0, -1.0, 1.0]
    assert de_error(x, p, prob) == 2.0


def test_problem_validation():
    with pytest.raises(ValueError):
        make_problem(["x"], "S", grid([(0, 1)], [3]), penalty=0.0)
    with pytest.raises(ValueError):
        make_problem(["x"], "S", grid([(0, 1)], [3]), [BoundaryCondition((0.0, 1.0), 1.0)])
    with pytest.raises(ValueError):
        make_problem(["x"], "S", grid([(0, 1)], [3]), [BoundaryCondition((0.0,), 1.0, (("y", 1),))])


def test_grid():
    g = grid([(0, 1)], [3])
    assert np.allclose(g[:, 0], [0.25, 0.5, 0.75])
    assert grid([(0, 1), (0, 2)], [2, 3]).shape == (6, 2)
    assert np.allclose(grid([(0, 1)], [3], interior=False)[:, 0], [0, 0.5, 1])
