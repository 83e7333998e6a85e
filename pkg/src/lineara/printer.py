"""Rendering programs as surface text and as a structured tree.

The structured form is a JSON-compatible nested list that mirrors the
surface grammar one-to-one.  Its first element names the format version so
tooling can reject encodings it does not understand.
"""

from __future__ import annotations

from .ir import (
    REAL,
    Call,
    Drop,
    Dup,
    Expr,
    FuncDef,
    Let,
    LinAdd,
    LinScale,
    LinTuple,
    LinVar,
    LinZero,
    Lit,
    NlTuple,
    NlVar,
    Prim,
    Program,
    Real,
    Ret,
    Tup,
    Ty,
    UnpackLin,
    UnpackNl,
)

TREE_FORMAT = "lineara-tree/1"


def fmt_float(x: float) -> str:
    return repr(float(x))


def fmt_ty(t: Ty) -> str:
    return str(t)


def _names(nl, lin) -> str:
    left = " ".join(nl)
    right = " ".join(lin)
    return f"({left}{' ' if left else ''};{' ' if right else ''}{right})"


def _params(nl, lin) -> str:
    return _names([f"({n} {fmt_ty(t)})" for n, t in nl], [f"({n} {fmt_ty(t)})" for n, t in lin])


def _inline(e: Expr) -> str | None:
    """Single-line rendering for forms without sub-expressions."""
    if isinstance(e, Ret):
        return f"(ret {_names(e.nl, e.lin)})"
    if isinstance(e, Call):
        return f"(call {e.callee} {_names(e.nl_args, e.lin_args)})"
    if isinstance(e, (NlVar, LinVar)):
        return e.v
    if isinstance(e, Lit):
        return fmt_float(e.value)
    if isinstance(e, NlTuple):
        return "(tup" + "".join(" " + v for v in e.vars) + ")"
    if isinstance(e, LinTuple):
        return "(ltup" + "".join(" " + v for v in e.vars) + ")"
    if isinstance(e, Prim):
        return f"({e.op} {' '.join(e.args)})"
    if isinstance(e, LinZero):
        return f"(lzero {fmt_ty(e.ty)})"
    if isinstance(e, LinAdd):
        return f"(ladd {e.a} {e.b})"
    if isinstance(e, LinScale):
        return f"(lscale {e.coeff} {e.arg})"
    if isinstance(e, Dup):
        return f"(dup {e.v})"
    return None


def _expr_lines(e: Expr, indent: int, out: list[str]) -> None:
    pad = " " * indent
    flat = _inline(e)
    if flat is not None:
        out.append(pad + flat)
        return
    if isinstance(e, Drop):
        inner = _inline(e.inner)
        if inner is not None:
            out.append(f"{pad}(drop {inner})")
            return
        out.append(pad + "(drop")
        _expr_lines(e.inner, indent + 2, out)
        out[-1] += ")"
        return
    if isinstance(e, Let):
        out.append(f"{pad}(let {_params(e.nl_binds, e.lin_binds)}")
        _expr_lines(e.bound, indent + 2, out)
        _expr_lines(e.body, indent + 2, out)
        out[-1] += ")"
        return
    if isinstance(e, (UnpackNl, UnpackLin)):
        binds = (e.binds, ()) if isinstance(e, UnpackNl) else ((), e.binds)
        out.append(f"{pad}(untup {_params(*binds)} {e.source}")
        _expr_lines(e.body, indent + 2, out)
        out[-1] += ")"
        return
    raise TypeError(f"cannot print {e!r}")


def pretty_def(d: FuncDef) -> str:
    rets = _names([fmt_ty(t) for t in d.nl_ret], [fmt_ty(t) for t in d.lin_ret])
    lines = [f"(def {d.name} {_params(d.nl_params, d.lin_params)} {rets}"]
    _expr_lines(d.body, 2, lines)
    lines[-1] += ")"
    return "\n".join(lines)


def pretty_expr(e: Expr) -> str:
    lines: list[str] = []
    _expr_lines(e, 0, lines)
    return "\n".join(lines)


def pretty_print(p: Program) -> str:
    """Surface syntax for ``p``; ``parse_program`` inverts it exactly."""
    if not p.defs:
        return ""
    return "\n\n".join(pretty_def(d) for d in p.defs) + "\n"


# -- structured tree ------------------------------------------------------------


def ty_tree(t: Ty):
    if isinstance(t, Real):
        return "R"
    return ["tup", *[ty_tree(x) for x in t.elems]]


def _binds_tree(bs):
    return [[n, ty_tree(t)] for n, t in bs]


def expr_tree(e: Expr):
    if isinstance(e, Ret):
        return ["ret", list(e.nl), list(e.lin)]
    if isinstance(e, Let):
        return ["let", _binds_tree(e.nl_binds), _binds_tree(e.lin_binds), expr_tree(e.bound), expr_tree(e.body)]
    if isinstance(e, UnpackNl):
        return ["untup", _binds_tree(e.binds), [], e.source, expr_tree(e.body)]
    if isinstance(e, UnpackLin):
        return ["untup", [], _binds_tree(e.binds), e.source, expr_tree(e.body)]
    if isinstance(e, Call):
        return ["call", e.callee, list(e.nl_args), list(e.lin_args)]
    if isinstance(e, NlVar):
        return ["var", e.v]
    if isinstance(e, LinVar):
        return ["lvar", e.v]
    if isinstance(e, Lit):
        return ["lit", float(e.value)]
    if isinstance(e, NlTuple):
        return ["tup", *e.vars]
    if isinstance(e, LinTuple):
        return ["ltup", *e.vars]
    if isinstance(e, Prim):
        return [e.op, *e.args]
    if isinstance(e, LinZero):
        return ["lzero", ty_tree(e.ty)]
    if isinstance(e, LinAdd):
        return ["ladd", e.a, e.b]
    if isinstance(e, LinScale):
        return ["lscale", e.coeff, e.arg]
    if isinstance(e, Dup):
        return ["dup", e.v]
    if isinstance(e, Drop):
        return ["drop", expr_tree(e.inner)]
    raise TypeError(f"cannot encode {e!r}")


def to_tree(p: Program):
    defs = [
        [
            "def",
            d.name,
            _binds_tree(d.nl_params),
            _binds_tree(d.lin_params),
            [ty_tree(t) for t in d.nl_ret],
            [ty_tree(t) for t in d.lin_ret],
            expr_tree(d.body),
        ]
        for d in p.defs
    ]
    return [TREE_FORMAT, defs]


def ty_from_tree(x) -> Ty:
    if x == "R":
        return REAL
    if isinstance(x, list) and x and x[0] == "tup":
        return Tup(tuple(ty_from_tree(y) for y in x[1:]))
    raise ValueError(f"bad type node {x!r}")


def _binds_from(xs):
    return tuple((n, ty_from_tree(t)) for n, t in xs)


def expr_from_tree(x) -> Expr:
    tag, rest = x[0], x[1:]
    if tag == "ret":
        return Ret(tuple(rest[0]), tuple(rest[1]))
    if tag == "let":
        return Let(_binds_from(rest[0]), _binds_from(rest[1]), expr_from_tree(rest[2]), expr_from_tree(rest[3]))
    if tag == "untup":
        nl, lin, src, body = rest
        if lin:
            return UnpackLin(_binds_from(lin), src, expr_from_tree(body))
        return UnpackNl(_binds_from(nl), src, expr_from_tree(body))
    if tag == "call":
        return Call(rest[0], tuple(rest[1]), tuple(rest[2]))
    if tag == "var":
        return NlVar(rest[0])
    if tag == "lvar":
        return LinVar(rest[0])
    if tag == "lit":
        return Lit(float(rest[0]))
    if tag == "tup":
        return NlTuple(tuple(rest))
    if tag == "ltup":
        return LinTuple(tuple(rest))
    if tag in ("sin", "cos", "exp", "add", "mul"):
        return Prim(tag, tuple(rest))
    if tag == "lzero":
        return LinZero(ty_from_tree(rest[0]))
    if tag == "ladd":
        return LinAdd(rest[0], rest[1])
    if tag == "lscale":
        return LinScale(rest[0], rest[1])
    if tag == "dup":
        return Dup(rest[0])
    if tag == "drop":
        return Drop(expr_from_tree(rest[0]))
    raise ValueError(f"unknown tree tag {tag!r}")


def from_tree(tree) -> Program:
    if not (isinstance(tree, list) and len(tree) == 2 and tree[0] == TREE_FORMAT):
        raise ValueError(f"expected a {TREE_FORMAT} encoding")
    defs = []
    for _, name, nlp, linp, nlr, linr, body in tree[1]:
        defs.append(
            FuncDef(
                name,
                _binds_from(nlp),
                _binds_from(linp),
                tuple(ty_from_tree(t) for t in nlr),
                tuple(ty_from_tree(t) for t in linr),
                expr_from_tree(body),
            )
        )
    return Program(tuple(defs))
