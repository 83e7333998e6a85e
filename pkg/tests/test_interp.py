import math
import random

import pytest

from lineara import EvalError, evaluate, format_value, parse_program, parse_values
from lineara.oracle import GenConfig, generate_program, random_args


def run(src, f, nl=(), lin=()):
    return evaluate(parse_program(src), f, nl, lin)


def test_square():
    assert run("(def square ((x R) ;) (R ;) (mul x x))", "square", [3.0]) == ((9.0,), (), 1)


def test_lscale_costs_one_per_scalar():
    assert run("(def f ((c R) ; (dx R)) (; R) (lscale c dx))", "f", [2.0], [5.0]) == ((), (10.0,), 1)
    _, lin, w = run(
        "(def f ((c R) ; (dx (tup R (tup R R)))) (; (tup R (tup R R))) (lscale c dx))",
        "f",
        [2.0],
        [(1.0, (2.0, 3.0))],
    )
    assert lin == ((2.0, (4.0, 6.0)),) and w == 3


def test_dup_is_free():
    assert run("(def f (; (dx R)) (; R R) (dup dx))", "f", [], [5.0]) == ((), (5.0, 5.0), 0)


def test_ladd_costs_one_per_scalar():
    src = "(def f (; (a (tup R R)) (b (tup R R))) (; (tup R R)) (ladd a b))"
    assert run(src, "f", [], [(1.0, 2.0), (3.0, 4.0)]) == ((), ((4.0, 6.0),), 2)


def test_drop_charges_inner_work_plus_scalars():
    # inner: one primitive (1) then drop of a 1-scalar result (1)
    src = "(def f ((x R) ;) (R ;) (let (;) (drop (sin x)) (ret (x ;))))"
    assert run(src, "f", [0.5])[2] == 2
    # dropping a linear tuple of three scalars costs 3
    src = "(def f (; (dx (tup R (tup R R)))) (;) (drop dx))"
    assert run(src, "f", [], [(1.0, (2.0, 3.0))])[2] == 3
    # empty tuples have no scalars, so nothing is charged
    src = "(def f ((x (tup)) ;) (;) (drop x))"
    assert run(src, "f", [()])[2] == 0


def test_zero_cost_forms():
    src = (
        "(def f ((x R) ; (dx R)) ((tup R R) ; (tup R R))"
        " (let ((t (tup R R)) ;) (tup x x)"
        " (let ((k R) ;) 4.0"
        " (let (; (z R)) (lzero R)"
        " (let (; (u (tup R R))) (ltup dx z)"
        " (let (;) (drop (ret (k ;)))"
        " (ret (t ; u))))))))"
    )
    nl, lin, w = run(src, "f", [1.0], [2.0])
    assert nl == ((1.0, 1.0),) and lin == ((2.0, 0.0),)
    assert w == 1  # only the drop of one scalar


def test_call_costs_callee_body():
    src = "(def sq ((x R) ;) (R ;) (mul x x))\n(def f ((x R) ;) (R ;) (let ((y R) ;) (call sq (x ;)) (call sq (y ;))))"
    assert run(src, "f", [2.0]) == ((16.0,), (), 2)


def test_closed_term_returns_zero():
    src = "(def f ((x R) ;) (; R) (let (; (a R)) (lzero R) (let (; (b R)) (lzero R) (ladd a b))))"
    assert run(src, "f", [3.0])[1] == (0.0,)


def test_primitives():
    src = (
        "(def f ((x R) (y R) ;) (R R R R R ;)"
        " (let ((a R) ;) (sin x) (let ((b R) ;) (cos x) (let ((c R) ;) (exp x)"
        " (let ((d R) ;) (add x y) (let ((e R) ;) (mul x y) (ret (a b c d e ;))))))))"
    )
    nl, _, w = run(src, "f", [0.5, 2.0])
    assert nl == (math.sin(0.5), math.cos(0.5), math.exp(0.5), 2.5, 1.0)
    assert w == 5


@pytest.mark.parametrize(
    "args, lin, msg",
    [
        ([], [], "expects"),
        ([(1.0,)], [], "does not match"),
        ([math.inf], [], "does not match"),
    ],
)
def test_bad_arguments(args, lin, msg):
    with pytest.raises(EvalError, match=msg):
        run("(def f ((x R) ;) (R ;) x)", "f", args, lin)


def test_unknown_function():
    with pytest.raises(EvalError, match="unknown function"):
        run("(def f ((x R) ;) (R ;) x)", "g")


def test_overflow_is_an_eval_error():
    with pytest.raises(EvalError, match="overflow"):
        run("(def f ((x R) ;) (R ;) (exp x))", "f", [1000.0])


def test_value_syntax():
    assert parse_values("3 (1 2) ()") == [3.0, (1.0, 2.0), ()]
    assert parse_values("") == []
    assert format_value((1.0, (2.5, -0.1))) == "(1 (2.5 -0.10000000000000001))"
    for bad in ["(1 2", "1)", "x"]:
        with pytest.raises(ValueError):
            parse_values(bad)


def test_hook_sees_every_subexpression():
    seen = []
    p = parse_program("(def f ((x R) ;) (R ;) (let ((y R) ;) (sin x) (mul y y)))")
    evaluate(p, "f", [1.0], hook=lambda e, env, nl, lin, w: seen.append((type(e).__name__, w)))
    assert seen == [("Prim", 1), ("Prim", 1), ("Let", 2)]


@pytest.mark.parametrize("seed", range(50))
def test_work_independent_of_values(seed):
    p = generate_program(GenConfig(seed=seed, mode="a", max_depth=3))
    rng = random.Random(seed)
    works = {evaluate(p, "f", *random_args(p.lookup("f"), rng))[2] for _ in range(4)}
    assert len(works) == 1
