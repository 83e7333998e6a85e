"""Reverse-mode differentiation assembled from the three passes, plus
delinearization for taking derivatives of derivatives.

``reverse_derivative`` runs forward differentiation, unzips the result and
transposes the linear half.  For ``f`` this leaves

* ``f.jvp.nl``: primal results followed by the tape, and
* ``f.jvp.lin.T``: tape and output cotangents to input cotangents.

``delinearize`` moves every linear binder to the non-linear side, turning a
linear definition into an ordinary one that can be differentiated again.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .interp import Value, as_value, evaluate
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
    NameSupply,
    NlTuple,
    NlVar,
    Prim,
    Program,
    Real,
    Ret,
    Ty,
    UnpackLin,
    UnpackNl,
    binders_of,
    reachable,
    uniquify,
    walk,
)
from .jvp import jvp, jvp_name
from .transpose import t_name, transpose
from .unzip import lin_name, nl_name, unzip

DELIN_SUFFIX = ".delin"
GRAD_SUFFIX = ".grad"


class PipelineError(Exception):
    pass


@dataclass(frozen=True)
class ReverseBundle:
    fwd_def: str
    bwd_def: str
    n_results: int
    n_tape: int


def reverse_derivative(p: Program, f: str, supply: NameSupply | None = None) -> tuple[Program, ReverseBundle]:
    if f not in p:
        raise PipelineError(f"unknown function {f!r}")
    supply = supply or NameSupply.for_program(p)
    fj = jvp_name(f)
    q = jvp(p, [f], supply)
    q = unzip(q, [fj], supply=supply)
    q = transpose(q, [lin_name(fj)], supply)
    fwd = q.lookup(nl_name(fj))
    k = len(p.lookup(f).nl_ret)
    return q, ReverseBundle(fwd.name, t_name(lin_name(fj)), k, len(fwd.nl_ret) - k)


def vjp(p: Program, f: str, point: Sequence, cotangents: Sequence) -> tuple[list[Value], list[Value]]:
    """Primal results of ``f`` at ``point`` and the pulled-back cotangents."""
    q, b = reverse_derivative(p, f)
    out, _, _ = evaluate(q, b.fwd_def, point)
    ys, tape = list(out[: b.n_results]), list(out[b.n_results :])
    _, cts, _ = evaluate(q, b.bwd_def, tape, cotangents)
    return ys, list(cts)


def gradient(p: Program, f: str, point: Sequence) -> list[Value]:
    """Gradient of a scalar-valued ``f``: one cotangent per parameter."""
    d = p.lookup(f)
    if d.nl_ret != (REAL,) or d.lin_params or d.lin_ret:
        raise PipelineError(f"{f} must take only non-linear inputs and return exactly one real scalar")
    _, cts = vjp(p, f, [as_value(x) for x in point], [1.0])
    return cts


# -- delinearization -------------------------------------------------------------


def delin_name(f: str) -> str:
    return f + DELIN_SUFFIX


class _Delin:
    def __init__(self, supply: NameSupply, types: dict[str, Ty]):
        self.supply = supply
        self.types = types

    def fresh(self, hint: str, t: Ty) -> str:
        n = self.supply.fresh(hint)
        self.types[n] = t
        return n

    def zero(self, t: Ty) -> Expr:
        if isinstance(t, Real):
            return Lit(0.0)
        names = [self.fresh("z", s) for s in t.elems]
        out: Expr = NlTuple(tuple(names))
        for n, s in reversed(list(zip(names, t.elems))):
            out = Let(((n, s),), (), self.zero(s), out)
        return out

    def pointwise(self, op: str, t: Ty, a: str, b: str, scalar_left: bool) -> Expr:
        """``op`` applied leaf by leaf; with ``scalar_left`` ``a`` is a scalar
        coefficient shared by every leaf of ``b``."""
        if isinstance(t, Real):
            return Prim(op, (a, b))
        bs = [self.fresh("e", s) for s in t.elems]
        as_ = [a] * len(bs) if scalar_left else [self.fresh("e", s) for s in t.elems]
        rs = [self.fresh("r", s) for s in t.elems]
        out: Expr = NlTuple(tuple(rs))
        for ai, bi, ri, s in reversed(list(zip(as_, bs, rs, t.elems))):
            out = Let(((ri, s),), (), self.pointwise(op, s, ai, bi, scalar_left), out)
        if scalar_left and not t.elems:
            # nothing to scale, but the coefficient must still be consumed
            out = Let((), (), Drop(NlVar(a)), out)
        out = UnpackNl(tuple(zip(bs, t.elems)), b, out)
        if not scalar_left:
            out = UnpackNl(tuple(zip(as_, t.elems)), a, out)
        return out

    def expr(self, e: Expr) -> Expr:
        if isinstance(e, Ret):
            return Ret(e.nl + e.lin, ())
        if isinstance(e, Let):
            return Let(e.nl_binds + e.lin_binds, (), self.expr(e.bound), self.expr(e.body))
        if isinstance(e, (UnpackNl, UnpackLin)):
            return UnpackNl(e.binds, e.source, self.expr(e.body))
        if isinstance(e, Call):
            return Call(delin_name(e.callee), e.nl_args + e.lin_args, ())
        if isinstance(e, LinVar):
            return NlVar(e.v)
        if isinstance(e, LinZero):
            return self.zero(e.ty)
        if isinstance(e, LinTuple):
            return NlTuple(e.vars)
        if isinstance(e, LinAdd):
            return self.pointwise("add", self.types[e.a], e.a, e.b, False)
        if isinstance(e, LinScale):
            return self.pointwise("mul", self.types[e.arg], e.coeff, e.arg, True)
        if isinstance(e, Dup):
            return Ret((e.v, e.v), ())
        if isinstance(e, Drop):
            return Drop(self.expr(e.inner))
        return e


def _binder_types(d: FuncDef) -> dict[str, Ty]:
    ty = dict(d.nl_params + d.lin_params)
    for x in walk(d.body):
        ty.update(binders_of(x))
    return ty


def delinearize_def(d: FuncDef, supply: NameSupply) -> FuncDef:
    d = uniquify(d, supply)
    body = _Delin(supply, _binder_types(d)).expr(d.body)
    return FuncDef(delin_name(d.name), d.nl_params + d.lin_params, (), d.nl_ret + d.lin_ret, (), body)


def delinearize(p: Program, f, supply: NameSupply | None = None) -> Program:
    """Add ``g.delin`` for ``f`` and everything it calls."""
    roots = [f] if isinstance(f, str) else list(f)
    for r in roots:
        if r not in p:
            raise PipelineError(f"unknown function {r!r}")
    supply = supply or NameSupply.for_program(p)
    new = [delinearize_def(d, supply) for d in reachable(p, roots) if delin_name(d.name) not in p]
    return p.extend(new)


def gradient_def(p: Program, f: str, supply: NameSupply | None = None) -> Program:
    """Add ``f.grad``, an ordinary definition computing the gradient of ``f``.

    Because the result uses no linear syntax it can be fed back into
    :func:`lineara.jvp.jvp` for second derivatives.
    """
    d = p.lookup(f)
    if d.nl_ret != (REAL,) or not d.is_nonlinear:
        raise PipelineError(f"{f} must take only non-linear inputs and return exactly one real scalar")
    supply = supply or NameSupply.for_program(p)
    q, b = reverse_derivative(p, f, supply)
    q = delinearize(q, b.bwd_def, supply)
    fwd = q.lookup(b.fwd_def)
    y = supply.fresh("y")
    tape = [(supply.fresh("tp"), t) for t in fwd.nl_ret[1:]]
    one = supply.fresh("one")
    args = tuple(n for n, _ in tape) + (one,)
    body = Let(
        ((y, REAL),) + tuple(tape),
        (),
        Call(b.fwd_def, tuple(n for n, _ in d.nl_params), ()),
        Let(
            (),
            (),
            Drop(NlVar(y)),
            Let(((one, REAL),), (), Lit(1.0), Call(delin_name(b.bwd_def), args, ())),
        ),
    )
    gd = FuncDef(f + GRAD_SUFFIX, d.nl_params, (), tuple(t for _, t in d.nl_params), (), body)
    return q.extend([gd])
