"""Tape size against recomputation.

Plain unzipping stores every intermediate the linear half needs.  With
``checkpoint=True`` those intermediates are recomputed inside the linear
half instead, so the tape shrinks toward the inputs and the linear half
does more work.  The tangent it computes is the same either way.
"""

from pathlib import Path

from lineara import evaluate, jvp, parse_program, typecheck_program, unzip

p = parse_program((Path(__file__).parent / "poly.lina").read_text())
q = jvp(p, ["poly"])
x, y, dx, dy = 0.7, 1.3, 1.0, -0.5

for checkpoint in (False, True):
    u = unzip(q, ["poly.jvp"], checkpoint=checkpoint)
    typecheck_program(u)
    lin = u.lookup("poly.jvp.lin")
    out, _, w_nl = evaluate(u, "poly.jvp.nl", [x, y])
    _, (t,), w_lin = evaluate(u, "poly.jvp.lin", out[1:], [dx, dy])
    tape = ", ".join(n for n, _ in lin.nl_params)
    print(f"checkpoint={checkpoint!s:5}  tape=[{tape}]  work nl={w_nl} lin={w_lin}  tangent={t:.12f}")
