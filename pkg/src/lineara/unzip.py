"""Unzipping: split a mixed definition into a non-linear and a linear half.

For a definition ``f`` the pass emits

* ``f.nl`` taking ``f``'s non-linear parameters and returning ``f``'s
  non-linear results followed by the tape, and
* ``f.lin`` taking the tape (non-linear) and ``f``'s linear parameters and
  returning ``f``'s linear results.

The expression-level transform produces a binding context ``E`` holding all
the non-linear work, a non-linear result expression and a linear residual.
The tape is every parameter or context binder the residual reads, ordered by
where it was bound.

With ``checkpoint=True`` a non-linear let whose binders the residual needs is
recomputed inside the residual instead of being taped.  Values are unchanged;
work can only grow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .ir import (
    LIN_LEAVES,
    NL_LEAVES,
    Binder,
    Call,
    Drop,
    Dup,
    Expr,
    FuncDef,
    Let,
    NameSupply,
    Program,
    Ret,
    Ty,
    UnpackLin,
    UnpackNl,
    binders_of,
    free_nl,
    reachable,
    rename,
    uniquify,
    walk,
)

NL_SUFFIX = ".nl"
LIN_SUFFIX = ".lin"


class UnzipError(Exception):
    pass


def nl_name(f: str) -> str:
    return f + NL_SUFFIX


def lin_name(f: str) -> str:
    return f + LIN_SUFFIX


@dataclass(frozen=True)
class CtxLet:
    binds: tuple[Binder, ...]
    bound: Expr


@dataclass(frozen=True)
class CtxUnpack:
    binds: tuple[Binder, ...]
    source: str


CtxItem = Union[CtxLet, CtxUnpack]


@dataclass(frozen=True)
class UnzipResult:
    ctx: tuple[CtxItem, ...]
    nl_expr: Expr
    lin_expr: Expr
    tape: tuple[Binder, ...] = ()


def plug(ctx, hole: Expr) -> Expr:
    for item in reversed(ctx):
        if isinstance(item, CtxLet):
            hole = Let(item.binds, (), item.bound, hole)
        else:
            hole = UnpackNl(item.binds, item.source, hole)
    return hole


def _ctx_free(ctx) -> frozenset[str]:
    """Variables read by context items (binders of earlier items included)."""
    out: set[str] = set()
    for item in ctx:
        if isinstance(item, CtxLet):
            out |= free_nl(item.bound)
        else:
            out.add(item.source)
    return frozenset(out)


_NOOP = (Ret((), ()), Drop(Ret((), ())))


def _is_noop(e: Expr) -> bool:
    """Zero-result, zero-work expressions that can be discarded."""
    return e in _NOOP


class _Unzip:
    def __init__(self, table: Mapping[str, FuncDef], supply: NameSupply, checkpoint: bool):
        self.table = table
        self.supply = supply
        self.checkpoint = checkpoint

    def expr(self, e: Expr) -> tuple[tuple, Expr, Expr]:
        if isinstance(e, Ret):
            return (), Ret(e.nl, ()), Ret((), e.lin)
        if isinstance(e, NL_LEAVES):
            return (), e, Ret((), ())
        if isinstance(e, LIN_LEAVES + (Dup,)):
            return (), Ret((), ()), e
        if isinstance(e, Drop):
            ctx, e1, d1 = self.expr(e.inner)
            return ctx, Drop(e1), Drop(d1)
        if isinstance(e, UnpackNl):
            ctx, e1, d1 = self.expr(e.body)
            return (CtxUnpack(e.binds, e.source),) + ctx, e1, d1
        if isinstance(e, UnpackLin):
            ctx, e1, d1 = self.expr(e.body)
            return ctx, e1, UnpackLin(e.binds, e.source, d1)
        if isinstance(e, Call):
            callee_nl = self.table[nl_name(e.callee)]
            k = len(self.table[e.callee].nl_ret)
            ws = tuple((self.supply.fresh("w"), t) for t in callee_nl.nl_ret[:k])
            xs = tuple((self.supply.fresh("x"), t) for t in callee_nl.nl_ret[k:])
            item = CtxLet(ws + xs, Call(nl_name(e.callee), e.nl_args, ()))
            resid = Call(lin_name(e.callee), tuple(n for n, _ in xs), e.lin_args)
            return (item,), Ret(tuple(n for n, _ in ws), ()), resid
        if isinstance(e, Let):
            return self.let(e)
        raise UnzipError(f"cannot unzip {type(e).__name__}")

    def let(self, e: Let):
        ctx1, e1, d1 = self.expr(e.bound)
        ctx2, e2, d2 = self.expr(e.body)
        names = [n for n, _ in e.nl_binds]
        if self.checkpoint and names:
            need_lin = set(names) & free_nl(d2)
            if need_lin:
                need_nl = set(names) & (_ctx_free(ctx2) | free_nl(e2))
                mid: tuple = ()
                if need_nl:
                    mid = (CtxLet(e.nl_binds, e1),)
                    unused = tuple(n for n in names if n not in need_nl)
                    if unused:
                        mid += (CtxLet((), Drop(Ret(unused, ()))),)
                # recomputed copies get fresh names so they can never clash
                # with context binders that reach the residual via the tape
                fresh = {n: self.supply.fresh(n) for n in names}
                inner = rename(self.lin_let(e.lin_binds, d1, d2), fresh)
                unused = tuple(fresh[n] for n in names if n not in need_lin)
                if unused:
                    inner = Let((), (), Drop(Ret(unused, ())), inner)
                binds = tuple((fresh[n], t) for n, t in e.nl_binds)
                return ctx1 + mid + ctx2, e2, Let(binds, (), e1, inner)
        mid = () if (not names and _is_noop(e1)) else (CtxLet(e.nl_binds, e1),)
        return ctx1 + mid + ctx2, e2, self.lin_let(e.lin_binds, d1, d2)

    @staticmethod
    def lin_let(lin_binds, d1: Expr, d2: Expr) -> Expr:
        if not lin_binds and _is_noop(d1):
            return d2
        return Let((), lin_binds, d1, d2)


def _binder_types(d: FuncDef) -> dict[str, Ty]:
    ty = dict(d.nl_params + d.lin_params)
    for x in walk(d.body):
        ty.update(binders_of(x))
    return ty


def _ctx_binders(ctx) -> list[Binder]:
    out: list[Binder] = []
    for item in ctx:
        out.extend(item.binds)
    return out


def unzip_expr(
    d: FuncDef, table: Mapping[str, FuncDef], supply: NameSupply, checkpoint: bool = False
) -> UnzipResult:
    """Unzip the body of an already-uniquified ``d``; fills in the tape."""
    ctx, e1, d1 = _Unzip(table, supply, checkpoint).expr(d.body)
    read = free_nl(d1)
    tape = tuple(b for b in list(d.nl_params) + _ctx_binders(ctx) if b[0] in read)
    return UnzipResult(tuple(ctx), e1, d1, tape)


def nonlinear_partial(u: UnzipResult, nl_ret: tuple[Ty, ...], supply: NameSupply) -> Expr:
    tape = tuple(n for n, _ in u.tape)
    if isinstance(u.nl_expr, Ret):
        return plug(u.ctx, Ret(u.nl_expr.nl + tape, ()))
    ws = tuple((supply.fresh("w"), t) for t in nl_ret)
    tail = Let(ws, (), u.nl_expr, Ret(tuple(n for n, _ in ws) + tape, ()))
    return plug(u.ctx, tail)


def unzip_def(
    d: FuncDef, table: Mapping[str, FuncDef], supply: NameSupply, checkpoint: bool = False
) -> tuple[UnzipResult, FuncDef, FuncDef]:
    d = uniquify(d, supply)
    u = unzip_expr(d, table, supply, checkpoint)
    tape_tys = tuple(t for _, t in u.tape)
    fnl = FuncDef(nl_name(d.name), d.nl_params, (), d.nl_ret + tape_tys, (), nonlinear_partial(u, d.nl_ret, supply))
    flin = FuncDef(lin_name(d.name), u.tape, d.lin_params, (), d.lin_ret, u.lin_expr)
    return u, fnl, flin


def unzip(p: Program, roots, checkpoint: bool = False, supply: NameSupply | None = None) -> Program:
    """Add ``f.nl`` and ``f.lin`` for every root and everything it calls."""
    roots = [roots] if isinstance(roots, str) else list(roots)
    for r in roots:
        if r not in p:
            raise UnzipError(f"unknown function {r!r}")
    supply = supply or NameSupply.for_program(p)
    table = p.table()
    new: list[FuncDef] = []
    for d in reachable(p, roots):
        if nl_name(d.name) in table and lin_name(d.name) in table:
            continue
        _, fnl, flin = unzip_def(d, table, supply, checkpoint)
        table[fnl.name] = fnl
        table[flin.name] = flin
        new += [fnl, flin]
    return p.extend(new)


def reconstruct(u: UnzipResult, d: FuncDef, supply: NameSupply, name: str | None = None) -> FuncDef:
    """Glue the two halves back into one definition with ``d``'s signature.

    The non-linear partial runs first and hands over its results and the
    tape; the residual then runs outside the context's scope, seeing only
    the tape and the linear parameters.
    """
    ws = tuple((supply.fresh("w"), t) for t in d.nl_ret)
    ts = tuple((supply.fresh("t"), t) for _, t in u.tape)
    dws = tuple((supply.fresh("dw"), t) for t in d.lin_ret)
    partial = nonlinear_partial(u, d.nl_ret, supply)
    resid = rename(u.lin_expr, {x: t for (x, _), (t, _) in zip(u.tape, ts)})
    w_names = tuple(n for n, _ in ws)
    tail = Let((), dws, resid, Ret(w_names, tuple(n for n, _ in dws)))
    body = Let(ws + ts, (), partial, tail)
    return FuncDef(name or d.name + ".rec", d.nl_params, d.lin_params, d.nl_ret, d.lin_ret, body)
