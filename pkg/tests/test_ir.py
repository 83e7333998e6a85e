import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lineara import parse_program, pretty_print, program_size
from lineara.ir import (
    REAL,
    Call,
    Drop,
    Dup,
    Let,
    LinScale,
    LinVar,
    NameSupply,
    NlVar,
    Prim,
    Program,
    Ret,
    Tup,
    arity,
    free_vars,
    fresh_name,
    rename,
    scalar_count,
    uniquify,
    walk,
)
from lineara.oracle import GenConfig, generate_program


def test_fresh_names_follow_counter():
    s = NameSupply()
    assert fresh_name(s, "t") == "%t0"
    assert fresh_name(s, "t") == "%t1"
    assert s.counter == 2


def test_fresh_names_distinct_for_same_hint():
    s = NameSupply()
    names = {s.fresh("x") for _ in range(50)}
    assert len(names) == 50


def test_fresh_names_skip_taken():
    p = parse_program("(def f ((x R) ;) (R ;) x)")
    s = NameSupply.for_program(p)
    s.taken.add("%x0")
    assert s.fresh("x") == "%x1"


def test_fresh_name_strips_sigil_and_digits_from_hint():
    s = NameSupply(counter=7)
    assert s.fresh("%dy12") == "%dy7"


def test_program_size_example():
    p = parse_program("(def f ((x R) ;) (R ;) x)")
    assert program_size(p) == 5


def test_empty_program_size_and_text():
    assert program_size(Program(())) == 0
    assert pretty_print(Program(())) == ""


def test_size_monotone_under_extension():
    p = parse_program("(def f ((x R) ;) (R ;) x)")
    q = p.extend(parse_program("(def g (;) (R ;) 1.0)").defs)
    assert program_size(q) > program_size(p)


def test_scalar_count():
    assert scalar_count(REAL) == 1
    assert scalar_count(Tup(())) == 0
    assert scalar_count(Tup((REAL, Tup((REAL, REAL))))) == 3


def test_arity_of_forms():
    sigs = parse_program("(def g ((x R) ; (dx R)) (R R ; R) (let (; (a R) (b R)) (dup dx) (let (;) (drop b) (ret (x x ; a)))))").table()
    assert arity(Ret(("a", "b"), ("c",)), sigs) == (2, 1)
    assert arity(Dup("d"), sigs) == (0, 2)
    assert arity(Drop(NlVar("x")), sigs) == (0, 0)
    assert arity(Prim("sin", ("x",)), sigs) == (1, 0)
    assert arity(LinScale("c", "d"), sigs) == (0, 1)
    assert arity(Call("g", ("x",), ("d",)), sigs) == (2, 1)
    assert arity(Let((), (("a", REAL),), LinVar("d"), Ret((), ("a",))), sigs) == (0, 1)


def test_free_vars_respect_binders():
    d = parse_program(
        "(def f ((x R) ; (dx R)) (R ; R) (let ((y R) ;) (sin x) (let (; (dy R)) (lscale y dx) (ret (y ; dy)))))"
    ).defs[0]
    assert free_vars(d.body) == (frozenset({"x"}), frozenset({"dx"}))


def test_rename_only_touches_free_occurrences():
    e = Let((("y", REAL),), (), Prim("sin", ("x",)), Prim("mul", ("x", "y")))
    out = rename(e, {"x": "z", "y": "w"})
    assert out == Let((("y", REAL),), (), Prim("sin", ("z",)), Prim("mul", ("z", "y")))


def test_uniquify_renames_sibling_reuse():
    # sibling scopes may reuse a name; uniquify makes every binder distinct
    p = parse_program(
        "(def f ((x R) ;) (R ;)"
        " (let ((a R) ;) (let ((t R) ;) (sin x) (cos t))"
        " (let ((b R) ;) (let ((t R) ;) (exp x) (sin t)) (add a b))))"
    )
    u = uniquify(p.defs[0], NameSupply.for_program(p))
    binders = [n for x in walk(u.body) if isinstance(x, Let) for n, _ in x.nl_binds]
    assert len(binders) == len(set(binders))
    from lineara import evaluate

    assert evaluate(p, "f", [0.3]) == evaluate(Program((u,)), "f", [0.3])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["a", "b", "nl"]), st.integers(1, 4))
def test_print_parse_round_trip(seed, mode, depth):
    p = generate_program(GenConfig(seed=seed, mode=mode, max_depth=depth))
    assert parse_program(pretty_print(p)) == p


def test_generated_names_reparse():
    from lineara import jvp

    p = jvp(parse_program("(def sq ((x R) ;) (R ;) (mul x x))"), ["sq"])
    assert any(n.startswith("%") for n, _ in p.lookup("sq.jvp").lin_params)
    assert parse_program(pretty_print(p)) == p


def test_lookup_unknown_raises():
    with pytest.raises(KeyError):
        Program(()).lookup("nope")
