"""Transposition of linear definitions.

A linear definition ``f (xs ; dxs) -> (; ts)`` computes, for fixed
non-linear inputs, a linear map from ``dxs`` to its results.  ``f.T`` takes
the same non-linear inputs plus one cotangent per result and returns one
cotangent per linear parameter, in parameter order, by running the linear
dataflow backwards.

The transform is written with continuations: transposing ``e`` against the
cotangents of its results hands the cotangents of ``e``'s free linear
variables to a continuation, which builds the rest of the program.  This
keeps every shuffle implicit and the output linear in the input size.
"""

from __future__ import annotations

from typing import Callable, Mapping

from .ir import (
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
    NameSupply,
    Program,
    Ret,
    Ty,
    UnpackLin,
    UnpackNl,
    arity,
    binders_of,
    free_vars,
    mk_let,
    uniquify,
    walk,
)
from .typecheck import check_expr, linear_b_violation

T_SUFFIX = ".T"

CtMap = Mapping[str, str]
Cont = Callable[[CtMap], Expr]


class TransposeError(Exception):
    pass


def t_name(f: str) -> str:
    return f + T_SUFFIX


class _Transpose:
    def __init__(self, table: Mapping[str, FuncDef], supply: NameSupply, types: dict[str, Ty]):
        self.table = table
        self.supply = supply
        self.types = types

    def ct(self, v: str) -> str:
        return self.supply.fresh("ct" + v.lstrip("%"))

    def zeros(self, vs, k: Cont) -> Expr:
        """Bind a zero cotangent for each of ``vs`` and continue."""
        m = {v: self.ct(v) for v in vs}
        out = k(m)
        for v in reversed(list(vs)):
            out = Let((), ((m[v], self.types[v]),), LinZero(self.types[v]), out)
        return out

    def tr(self, e: Expr, cts: tuple[str, ...], k: Cont) -> Expr:
        fnl, flin = free_vars(e)
        m, n = arity(e, self.table)
        if m:
            raise TransposeError("expression with non-linear results in a linear position")
        if n == 0 and not flin:
            # purely non-linear work (for example a non-linear drop): keep it
            return mk_let((), (), e, k({}))

        if isinstance(e, Ret):
            return k(dict(zip(e.lin, cts)))
        if isinstance(e, LinVar):
            return k({e.v: cts[0]})
        if isinstance(e, LinZero):
            return Let((), (), Drop(LinVar(cts[0])), k({}))
        if isinstance(e, LinTuple):
            binds = tuple((self.ct(v), self.types[v]) for v in e.vars)
            return UnpackLin(binds, cts[0], k({v: b for v, (b, _) in zip(e.vars, binds)}))
        if isinstance(e, LinAdd):
            ca, cb = self.ct(e.a), self.ct(e.b)
            t = self.types[e.a]
            return Let((), ((ca, t), (cb, t)), Dup(cts[0]), k({e.a: ca, e.b: cb}))
        if isinstance(e, LinScale):
            c = self.ct(e.arg)
            return Let((), ((c, self.types[e.arg]),), LinScale(e.coeff, cts[0]), k({e.arg: c}))
        if isinstance(e, Dup):
            c = self.ct(e.v)
            return Let((), ((c, self.types[e.v]),), LinAdd(cts[0], cts[1]), k({e.v: c}))
        if isinstance(e, Call):
            d = self.table[e.callee]
            binds = tuple((self.ct(v), t) for v, (_, t) in zip(e.lin_args, d.lin_params))
            body = k({v: b for v, (b, _) in zip(e.lin_args, binds)})
            return Let((), binds, Call(t_name(e.callee), e.nl_args, cts), body)
        if isinstance(e, Drop):
            if not fnl:
                return self.zeros(sorted(flin), k)
            # the dropped expression reads non-linear variables that must stay
            # used, so run its transpose against zero cotangents
            _, rn = arity(e.inner, self.table)
            rtys = self.result_types(e.inner)
            names = [self.supply.fresh("zero") for _ in range(rn)]
            out = self.tr(e.inner, tuple(names), k)
            for nm, t in reversed(list(zip(names, rtys))):
                out = Let((), ((nm, t),), LinZero(t), out)
            return out
        if isinstance(e, Let):
            if e.nl_binds and e.lin_binds:
                raise TransposeError("mixed let is not in Linear B")
            if e.nl_binds:
                return Let(e.nl_binds, (), e.bound, self.tr(e.body, cts, k))
            inner = {n for n, _ in e.lin_binds}

            def after_body(m2: CtMap) -> Expr:
                bcts = tuple(m2[n] for n, _ in e.lin_binds)
                rest = {v: c for v, c in m2.items() if v not in inner}

                def after_bound(m1: CtMap) -> Expr:
                    both = dict(rest)
                    both.update(m1)
                    return k(both)

                return self.tr(e.bound, bcts, after_bound)

            return self.tr(e.body, cts, after_body)
        if isinstance(e, UnpackNl):
            return UnpackNl(e.binds, e.source, self.tr(e.body, cts, k))
        if isinstance(e, UnpackLin):
            inner = [n for n, _ in e.binds]

            def after(m: CtMap) -> Expr:
                c = self.ct(e.source)
                rest = {v: x for v, x in m.items() if v not in inner}
                rest[e.source] = c
                return Let(
                    (), ((c, self.types[e.source]),), LinTuple(tuple(m[v] for v in inner)), k(rest)
                )

            return self.tr(e.body, cts, after)
        raise TransposeError(f"cannot transpose {type(e).__name__}")

    def result_types(self, e: Expr) -> tuple[Ty, ...]:
        fnl, flin = free_vars(e)
        rep = check_expr(
            self.table, e, {v: self.types[v] for v in fnl}, {v: self.types[v] for v in flin}
        )
        return rep.lin_tys


def _binder_types(d: FuncDef) -> dict[str, Ty]:
    ty = dict(d.nl_params + d.lin_params)
    for x in walk(d.body):
        ty.update(binders_of(x))
    return ty


def transpose_def(d: FuncDef, table: Mapping[str, FuncDef], supply: NameSupply) -> FuncDef:
    if d.nl_ret:
        raise TransposeError(f"{d.name} has non-linear results; only linear definitions can be transposed")
    v = linear_b_violation(table, d.body)
    if v is not None:
        raise TransposeError(f"{d.name} is not in Linear B: {v}")
    d = uniquify(d, supply)
    tr = _Transpose(table, supply, _binder_types(d))
    cts = tuple((supply.fresh("ct"), t) for t in d.lin_ret)
    lin_names = [n for n, _ in d.lin_params]
    body = tr.tr(d.body, tuple(n for n, _ in cts), lambda m: Ret((), tuple(m[n] for n in lin_names)))
    return FuncDef(t_name(d.name), d.nl_params, cts, (), tuple(t for _, t in d.lin_params), body)


def _linear_callees(p: Program, roots) -> list[FuncDef]:
    """Definitions called in linear positions, transitively, in program order."""
    table = p.table()
    seen: set[str] = set()
    todo = list(roots)
    while todo:
        name = todo.pop()
        if name in seen:
            continue
        if name not in table:
            raise TransposeError(f"unknown function {name!r}")
        seen.add(name)
        for x in walk(table[name].body):
            if isinstance(x, Call) and not table[x.callee].is_nonlinear:
                todo.append(x.callee)
    return [d for d in p.defs if d.name in seen]


def transpose(p: Program, roots, supply: NameSupply | None = None) -> Program:
    """Add ``f.T`` for every root and every linear definition it calls."""
    roots = [roots] if isinstance(roots, str) else list(roots)
    supply = supply or NameSupply.for_program(p)
    table = p.table()
    new: list[FuncDef] = []
    for d in _linear_callees(p, roots):
        if t_name(d.name) in table:
            continue
        td = transpose_def(d, table, supply)
        table[td.name] = td
        new.append(td)
    return p.extend(new)
