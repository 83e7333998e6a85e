"""Walk through reverse mode one pass at a time on ``poly.lina``.

Forward differentiation adds ``poly.jvp``; unzipping splits it into a primal
half that records a tape and a linear half that consumes it; transposing the
linear half gives the backward pass.
"""

import math
from pathlib import Path

from lineara import Program, evaluate, jvp, parse_program, pretty_print, transpose, typecheck_program, unzip

HERE = Path(__file__).parent


def show(prog, name):
    return pretty_print(Program((prog.lookup(name),)))


p = parse_program((HERE / "poly.lina").read_text())
typecheck_program(p)

q = jvp(p, ["poly"])
print(";; after jvp")
print(show(q, "poly.jvp"))

q = unzip(q, ["poly.jvp"])
q = transpose(q, ["poly.jvp.lin"])
typecheck_program(q)
print(";; forward sweep, returning the result and the tape")
print(show(q, "poly.jvp.nl"))
print(";; backward pass")
print(show(q, "poly.jvp.lin.T"))

x, y = 0.7, 1.3
out, _, fwd_work = evaluate(q, "poly.jvp.nl", [x, y])
primal, tape = out[0], out[1:]
_, grads, bwd_work = evaluate(q, "poly.jvp.lin.T", tape, [1.0])
_, _, plain_work = evaluate(p, "poly", [x, y])

expect = [math.cos(x) * y + y * math.exp(x * y), math.sin(x) + x * math.exp(x * y)]
print(f"f({x}, {y}) = {primal:.12f}")
print("reverse gradient:", [f"{g:.12f}" for g in grads])
print("by hand:         ", [f"{g:.12f}" for g in expect])
print(f"work: primal {plain_work}, forward sweep {fwd_work}, backward sweep {bwd_work}")
