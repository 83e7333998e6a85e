import random

import pytest

from lineara import evaluate, is_linear_b, parse_program, reconstruct, typecheck_program, unzip
from lineara.ir import NameSupply, Program, free_nl, walk, Prim
from lineara.oracle import GenConfig, check_unzip, generate_program
from lineara.unzip import CtxLet, UnzipError, unzip_def

TAPE_EXAMPLE = (
    "(def f ((x R) ; (dx R)) (R ; R)"
    " (let ((y R) ;) (mul x x)"
    " (let (; (dy R)) (lscale y dx)"
    " (ret (y ; dy)))))"
)


def split(src, f="f", checkpoint=False):
    p = parse_program(src)
    s = NameSupply.for_program(p)
    u, fnl, flin = unzip_def(p.lookup(f), p.table(), s, checkpoint)
    return p, s, u, fnl, flin


def test_tape_example():
    _, _, u, fnl, flin = split(TAPE_EXAMPLE)
    assert u.ctx == (CtxLet((("y", fnl.nl_ret[0]),), Prim("mul", ("x", "x"))),)
    assert [n for n, _ in u.tape] == ["y"]
    assert free_nl(u.lin_expr) == {"y"}
    assert [n for n, _ in flin.nl_params] == ["y"]
    q = parse_program(TAPE_EXAMPLE).extend([fnl, flin])
    typecheck_program(q)
    assert evaluate(q, "f.nl", [3.0])[0] == (9.0, 9.0)
    assert evaluate(q, "f.lin", [9.0], [2.0])[1] == (18.0,)


def test_checkpoint_example():
    p, _, _, _, lin0 = split(TAPE_EXAMPLE)
    _, s, u1, fnl, flin = split(TAPE_EXAMPLE, checkpoint=True)
    assert [n for n, _ in u1.tape] == ["x"]
    # the residual recomputes the product itself
    assert any(isinstance(x, Prim) and x.op == "mul" for x in walk(u1.lin_expr))
    q = p.extend([fnl, flin])
    typecheck_program(q)
    w_plain = evaluate(p.extend([lin0]), "f.lin", [9.0], [2.0])[2]
    _, lin, w_ck = evaluate(q, "f.lin", [3.0], [2.0])
    assert lin == (18.0,)
    assert w_ck > w_plain
    base = evaluate(p, "f", [3.0], [2.0])
    r1 = reconstruct(u1, p.lookup("f"), s)
    out = evaluate(q.extend([r1]), r1.name, [3.0], [2.0])
    assert out[:2] == base[:2]
    assert out[2] > base[2]


def test_purely_nonlinear_def():
    p, s, u, fnl, flin = split("(def g ((x R) ;) (R ;) (sin x))", "g")
    assert u.tape == ()
    assert flin.nl_params == () and flin.lin_params == () and flin.lin_ret == ()
    q = p.extend([fnl, flin])
    assert evaluate(q, "g.nl", [0.5])[0] == evaluate(p, "g", [0.5])[0]
    assert evaluate(q, "g.lin")[:2] == ((), ())
    r = reconstruct(u, p.lookup("g"), s)
    assert evaluate(q.extend([r]), r.name, [0.5]) == evaluate(p, "g", [0.5])


def test_reconstruction_of_square_with_tangent():
    src = (
        "(def sq ((x R) ; (dx R)) (R ; R)"
        " (let ((y R) ;) (mul x x)"
        " (let (; (d1 R) (d2 R)) (dup dx)"
        " (let (; (a R)) (lscale x d1) (let (; (b R)) (lscale x d2)"
        " (let (; (t R)) (ladd a b) (ret (y ; t))))))))"
    )
    p, s, u, fnl, flin = split(src, "sq")
    r = reconstruct(u, p.lookup("sq"), s)
    q = p.extend([fnl, flin, r])
    typecheck_program(q)
    assert evaluate(q, r.name, [3.0], [1.0]) == evaluate(p, "sq", [3.0], [1.0]) == ((9.0,), (6.0,), 4)


def test_calls_thread_callee_tape():
    src = (
        "(def g ((c R) ; (dx R)) (R ; R)"
        " (let ((y R) ;) (exp c) (let (; (dy R)) (lscale y dx) (ret (y ; dy)))))\n"
        "(def f ((x R) ; (dx R)) (R ; R)"
        " (let ((a R) ; (da R)) (call g (x ; dx))"
        " (let ((b R) ; (db R)) (call g (a ; da)) (ret (b ; db)))))"
    )
    p = parse_program(src)
    q = unzip(p, ["f"])
    typecheck_program(q)
    assert all(n in q for n in ("g.nl", "g.lin", "f.nl", "f.lin"))
    reports = is_linear_b(q)
    assert all(reports[n].ok for n in ("g.nl", "g.lin", "f.nl", "f.lin"))
    out = evaluate(q, "f.nl", [0.1])[0]
    _, lin, _ = evaluate(q, "f.lin", out[1:], [1.0])
    assert lin == evaluate(p, "f", [0.1], [1.0])[1]


def test_drop_splits_into_both_halves():
    src = "(def f ((x R) ; (dx R)) (R ;) (let (;) (drop (lscale x dx)) (ret (x ;))))"
    p = parse_program(src)
    q = unzip(p, ["f"])
    assert is_linear_b(q)["f.nl"].ok and is_linear_b(q)["f.lin"].ok


def test_unknown_root():
    with pytest.raises(UnzipError):
        unzip(Program(()), ["f"])


@pytest.mark.parametrize("seed", range(120))
def test_generated_reconstruction(seed):
    p = generate_program(GenConfig(seed=seed, mode="a", max_depth=1 + seed % 4, n_helpers=2))
    q = unzip(p, ["f"])
    typecheck_program(q)
    reports = is_linear_b(q)
    assert all(reports[d.name].ok for d in q.defs if d.name.endswith((".nl", ".lin")))
    assert check_unzip(p, "f", random.Random(seed)) == []
    assert check_unzip(p, "f", random.Random(seed), checkpoint=True) == []


def test_nonlinear_partial_has_no_linear_syntax():
    p = generate_program(GenConfig(seed=11, mode="a", max_depth=4))
    q = unzip(p, ["f"])
    d = q.lookup("f.nl")
    assert d.lin_params == () and d.lin_ret == ()
    typecheck_program(Program(tuple(x for x in q.defs if x.name.endswith(".nl") or "." not in x.name)))
