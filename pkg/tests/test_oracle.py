import math
import random

import numpy as np
import pytest

from lineara import parse_program, pretty_print, typecheck_program
from lineara.ir import REAL, Let, Ret, Tup, walk
from lineara.oracle import (
    GenConfig,
    dot,
    finite_diff_jacobian,
    flatten,
    generate_program,
    random_value,
    unflatten,
    values_close,
)


def test_fd_sin_at_zero():
    p = parse_program("(def f ((x R) ;) (R ;) (sin x))")
    assert abs(finite_diff_jacobian(p, "f", [0.0])[0, 0] - 1.0) < 1e-8


def test_fd_square_at_three():
    p = parse_program("(def f ((x R) ;) (R ;) (mul x x))")
    assert abs(finite_diff_jacobian(p, "f", [3.0])[0, 0] - 6.0) < 1e-6


def test_fd_constant_row_is_zero():
    p = parse_program("(def f ((x R) (y R) ;) (R ;) (let ((k R) ;) 2.0 (let (;) (drop (add x y)) (ret (k ;)))))")
    assert np.all(finite_diff_jacobian(p, "f", [0.3, 4.0]) == 0.0)


def test_fd_tuple_shapes():
    p = parse_program("(def f ((p (tup R R)) ;) ((tup R R) R ;) (untup ((a R) (b R) ;) p (let ((m R) ;) (mul a b) (ret (p m ;)))))")
    J = finite_diff_jacobian(p, "f", [(2.0, 3.0)])
    assert J.shape == (3, 2)
    np.testing.assert_allclose(J, [[1, 0], [0, 1], [3, 2]], atol=1e-8)


def test_dot_and_flatten():
    assert dot([1.0, (2.0, 3.0)], [4.0, (5.0, 6.0)]) == 32.0
    t = [Tup((REAL, Tup((REAL,)))), REAL]
    assert unflatten(flatten([(1.0, (2.0,)), 3.0]), t) == [(1.0, (2.0,)), 3.0]


def test_values_close_tolerances():
    assert values_close([1.0], [1.0 + 1e-10])
    assert not values_close([1.0], [1.0 + 1e-8])
    assert values_close([0.0], [1e-13])
    # a caller-supplied magnitude scale widens the band for cancellation
    assert values_close([1e-8], [0.0], scales=[100.0])


def test_random_value_shapes():
    rng = random.Random(0)
    v = random_value(Tup((REAL, Tup(()))), rng)
    assert isinstance(v, tuple) and v[1] == () and -1.0 <= v[0] <= 1.0


def test_generator_deterministic():
    a = generate_program(GenConfig(seed=42, max_depth=4))
    b = generate_program(GenConfig(seed=42, max_depth=4))
    assert a == b
    assert pretty_print(a) == pretty_print(b)


def test_depth_one_is_single_ret():
    for seed in range(20):
        d = generate_program(GenConfig(seed=seed, max_depth=1, n_helpers=0)).lookup("f")
        assert isinstance(d.body, Ret)


@pytest.mark.parametrize("bad", [dict(max_depth=0), dict(mode="c"), dict(weights={"lit": 0.0}), dict(weights={"lit": -1.0})])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        GenConfig(**bad)


def test_generator_soundness_over_many_seeds():
    # generate_program itself typechecks its output; this drives 1200 seeds
    for seed in range(1200):
        p = generate_program(GenConfig(seed=seed, mode=("a", "b", "nl")[seed % 3], max_depth=1 + seed % 5))
        typecheck_program(p)


def test_generator_covers_every_constructor():
    seen, mixed = set(), 0
    for seed in range(300):
        for mode in ("a", "b"):
            for d in generate_program(GenConfig(seed=seed, mode=mode, max_depth=4, n_helpers=2)).defs:
                for x in walk(d.body):
                    seen.add(type(x).__name__)
                    mixed += isinstance(x, Let) and bool(x.nl_binds) and bool(x.lin_binds)
    assert seen >= {
        "Ret", "Let", "UnpackNl", "UnpackLin", "Call", "NlVar", "Lit", "NlTuple", "Prim",
        "LinVar", "LinZero", "LinTuple", "LinAdd", "LinScale", "Dup", "Drop",
    }
    assert mixed > 0


def test_linear_b_mode_has_only_linear_results():
    for seed in range(100):
        d = generate_program(GenConfig(seed=seed, mode="b", max_depth=3)).lookup("f")
        assert d.nl_ret == ()


def test_generated_values_stay_finite():
    from lineara.interp import evaluate
    from lineara.oracle import random_args

    for seed in range(200):
        p = generate_program(GenConfig(seed=seed, mode="a", max_depth=5, max_stmts=8))
        nl, lin, _ = evaluate(p, "f", *random_args(p.lookup("f"), random.Random(seed)))
        assert all(math.isfinite(v) for v in flatten(list(nl) + list(lin)))
