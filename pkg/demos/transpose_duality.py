"""A linear map and its transpose agree on inner products.

For a linear definition ``g`` and its transpose ``g.T``,
``<ct, g(x; v)> == <g.T(x; ct), v>`` for every tangent ``v`` and cotangent
``ct``.  The programs are random Linear B definitions from the generator.
"""

import random

from lineara import evaluate, transpose, typecheck_program
from lineara.oracle import GenConfig, dot, generate_program, random_args, random_value

rng = random.Random(0)
for seed in range(6):
    p = generate_program(GenConfig(seed=seed, mode="b", max_depth=2))
    f = p.defs[-1]
    q = transpose(p, [f.name])
    typecheck_program(q)
    xs, vs = random_args(f, rng)
    cts = [random_value(t, rng) for t in f.lin_ret]
    _, ys, _ = evaluate(q, f.name, xs, vs)
    _, back, _ = evaluate(q, f.name + ".T", xs, cts)
    lhs, rhs = dot(cts, ys), dot(back, vs)
    print(f"seed {seed}: {f.name:4} <ct, g v> = {lhs: .15f}   <g.T ct, v> = {rhs: .15f}")
