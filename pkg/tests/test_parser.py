import json

import pytest

from lineara import ParseError, from_tree, parse_program, pretty_print, to_tree
from lineara.ir import Dup, Prim, arity
from lineara.parser import offset_to_line_col
from lineara.printer import TREE_FORMAT


def test_square():
    p = parse_program("(def square ((x R) ;) (R ;) (mul x x))")
    assert len(p.defs) == 1
    assert p.defs[0].body == Prim("mul", ("x", "x"))


def test_compound_operand_is_anf_violation():
    with pytest.raises(ParseError, match="ANF"):
        parse_program("(def f ((x R) ;) (R ;) (mul (sin x) x))")


def test_dup_body():
    p = parse_program("(def f (; (dx R)) (; R R) (dup dx))")
    body = p.defs[0].body
    assert body == Dup("dx")
    assert arity(body, {}) == (0, 2)


def test_literal_operand_rejected():
    with pytest.raises(ParseError, match="literal operand"):
        parse_program("(def f ((x R) ;) (R ;) (mul x 2.0))")


def test_number_literals():
    p = parse_program("(def f (;) (R ;) -1.5e-3)")
    assert p.defs[0].body.value == -1.5e-3


@pytest.mark.parametrize(
    "src, msg",
    [
        ("(def f ((x R) ;) (R ;) (let ((x R) ;) (sin x) x))", "shadowing"),
        ("(def f ((x R) (x R) ;) (R ;) x)", "duplicate binder"),
        ("(def f ((x R) ;) (R ;) x) (def f ((x R) ;) (R ;) x)", "duplicate function"),
        ("(def f ((x R) ;) (R ;) (call g (x ;)))", "undefined or later-defined"),
        ("(def f ((x R) ;) (R ;) (foo x))", "unknown form"),
        ("(def f ((x R) ;) (R ;) (sin x y))", "takes 1 argument"),
        ("(def f ((x R) ;) (R ;) (sin x)", "unclosed"),
        ("(def f ((x R) ;) (R ;) x))", "unbalanced"),
        ("(def f ((x Q) ;) (R ;) x)", "expected a type"),
        ("(def f ((x R)) (R ;) x)", "exactly one ';'"),
    ],
)
def test_rejections(src, msg):
    with pytest.raises(ParseError, match=msg):
        parse_program(src)


def test_error_span_points_at_offender():
    src = "(def f ((x R) ;) (R ;)\n  (mul (sin x) x))"
    with pytest.raises(ParseError) as info:
        parse_program(src)
    start = info.value.span.start
    assert src[start:].startswith("(sin x)")
    assert offset_to_line_col(src, start) == (2, 8)


def test_earliest_error_wins():
    src = "(def f ((x R) ;) (R ;) (mul (sin x) x))\n(def f ((x R) ;) (R ;) x)"
    with pytest.raises(ParseError, match="ANF"):
        parse_program(src)


def test_comments_and_whitespace_ignored():
    a = parse_program(";; leading comment\n(def f ((x R) ;)   (R ;)\n\n  (sin x)) ;; trailing")
    b = parse_program("(def f ((x R) ;) (R ;) (sin x))")
    assert a == b


def test_untup_side_follows_source():
    p = parse_program("(def f (; (dp (tup))) (;) (untup (;) dp (ret (;))))")
    assert type(p.defs[0].body).__name__ == "UnpackLin"


def test_tree_round_trip():
    src = (
        "(def f ((c R) ; (dp (tup R R))) (R ; R)"
        " (untup (; (a R) (b R)) dp (let ((y R) ;) (mul c c) (let (; (s R)) (ladd a b)"
        " (let (; (t R)) (lscale y s) (ret (y ; t)))))))"
    )
    p = parse_program(src)
    tree = to_tree(p)
    assert tree[0] == TREE_FORMAT
    assert from_tree(json.loads(json.dumps(tree))) == p
    assert parse_program(pretty_print(from_tree(tree))) == p


def test_tree_rejects_unknown_version():
    with pytest.raises(ValueError):
        from_tree(["lineara-tree/0", []])
