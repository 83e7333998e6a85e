"""Hessian-vector products by differentiating a gradient.

``gradient_def`` builds ``poly.grad`` as an ordinary definition (the linear
backward pass is delinearized), so forward differentiation applies to it
again.  Evaluating ``poly.grad.jvp`` with tangent ``v`` gives ``H v``.
"""

import math
from pathlib import Path

from lineara import evaluate, gradient_def, jvp, parse_program, typecheck_program

p = parse_program((Path(__file__).parent / "poly.lina").read_text())
q = gradient_def(p, "poly")
q = jvp(q, ["poly.grad"])
typecheck_program(q)

x, y = 0.7, 1.3
e = math.exp(x * y)
hessian = [
    [-math.sin(x) * y + y * y * e, math.cos(x) + e + x * y * e],
    [math.cos(x) + e + x * y * e, x * x * e],
]
for v in ([1.0, 0.0], [0.0, 1.0], [0.3, -2.0]):
    grad, hv, _ = evaluate(q, "poly.grad.jvp", [x, y], v)
    exact = [sum(h * vi for h, vi in zip(row, v)) for row in hessian]
    print(f"v={v}  Hv={[round(a, 12) for a in hv]}  by hand={[round(a, 12) for a in exact]}")
print(f"gradient at ({x}, {y}): {[round(g, 12) for g in grad]}")
