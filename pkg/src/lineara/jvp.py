"""Forward-mode differentiation of the non-linear fragment.

Each definition ``f`` with parameters ``(x_i ;)`` and results ``(t_k ;)``
becomes ``f.jvp`` with parameters ``(x_i ; dx_i)`` and results
``(t_k ; t_k)``: the primal results followed by their tangents.  Tangent
types coincide with primal types.

The transformation threads a tangent map from primal names to tangent
names whose domain is exactly the free variables of the expression at hand.
Because tangents are linear, a primal referenced several times needs its
tangent fanned out with ``dup`` first; see ``_Jvp.share``.
"""

from __future__ import annotations

from collections import Counter
from typing import Callable, Mapping

from .ir import (
    LIN_LEAVES,
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
    LinZero,
    Lit,
    NameSupply,
    NlTuple,
    NlVar,
    Prim,
    Program,
    Ret,
    Tup,
    Ty,
    UnpackLin,
    UnpackNl,
    binders_of,
    free_nl,
    reachable,
    uniquify,
    walk,
)

JVP_SUFFIX = ".jvp"


class JvpError(Exception):
    pass


def jvp_name(f: str) -> str:
    return f + JVP_SUFFIX


def _uses_linear_syntax(d: FuncDef) -> bool:
    if not d.is_nonlinear:
        return True
    return any(isinstance(x, LIN_LEAVES + (Dup, UnpackLin)) for x in walk(d.body))


class _Jvp:
    def __init__(self, supply: NameSupply, types: dict[str, Ty]):
        self.supply = supply
        self.types = types

    def tname(self, v: str) -> str:
        return self.supply.fresh("d" + v.lstrip("%"))

    def share(self, tmap: Mapping[str, str], groups: list) -> tuple[Callable[[Expr], Expr], list[dict]]:
        """Give each group its own tangent name for every variable it mentions.

        A variable mentioned by k groups gets a right-nested chain of k-1
        dups.  Returns a wrapper placing the chain around an expression and
        one tangent map per group.
        """
        counts = Counter(v for g in groups for v in dict.fromkeys(g))
        pools: dict[str, list[str]] = {}
        chain: list[tuple] = []
        for v, k in counts.items():
            if k == 1:
                pools[v] = [tmap[v]]
                continue
            t = self.types[v]
            src, names = tmap[v], []
            for _ in range(k - 1):
                a, b = self.tname(v), self.tname(v)
                chain.append((src, a, b, t))
                names.append(a)
                src = b
            names.append(src)
            pools[v] = names
        maps = []
        for g in groups:
            maps.append({v: pools[v].pop(0) for v in dict.fromkeys(g)})

        def wrap(e: Expr) -> Expr:
            for src, a, b, t in reversed(chain):
                e = Let((), ((a, t), (b, t)), Dup(src), e)
            return e

        return wrap, maps

    def occ(self, tmap, refs: tuple[str, ...]):
        """Per-occurrence tangent names for a flat list of references."""
        wrap, maps = self.share(tmap, [[v] for v in refs])
        return wrap, [m[v] for m, v in zip(maps, refs)]

    def expr(self, e: Expr, tmap: Mapping[str, str]) -> Expr:
        if isinstance(e, Ret):
            wrap, ts = self.occ(tmap, e.nl)
            return wrap(Ret(e.nl, tuple(ts)))
        if isinstance(e, NlVar):
            return Ret((e.v,), (tmap[e.v],))
        if isinstance(e, Lit):
            p, t = self.supply.fresh("l"), self.supply.fresh("dl")
            return Let(((p, REAL),), (), e, Let((), ((t, REAL),), LinZero(REAL), Ret((p,), (t,))))
        if isinstance(e, NlTuple):
            wrap, ts = self.occ(tmap, e.vars)
            p, t = self.supply.fresh("tp"), self.supply.fresh("dtp")
            ty = self.types_of_tuple(e)
            body = Let(((p, ty),), (), e, Let((), ((t, ty),), LinTuple(tuple(ts)), Ret((p,), (t,))))
            return wrap(body)
        if isinstance(e, Prim):
            return self.prim(e, tmap)
        if isinstance(e, Call):
            wrap, ts = self.occ(tmap, e.nl_args)
            return wrap(Call(jvp_name(e.callee), e.nl_args, tuple(ts)))
        if isinstance(e, Drop):
            return Drop(self.expr(e.inner, tmap))
        if isinstance(e, Let):
            names = {n for n, _ in e.nl_binds}
            fb = sorted(free_nl(e.bound))
            fe = sorted(free_nl(e.body) - names)
            wrap, (m1, m2) = self.share(tmap, [fb, fe])
            tb = tuple((self.tname(n), t) for n, t in e.nl_binds)
            m2 = dict(m2)
            m2.update({n: tn for (n, _), (tn, _) in zip(e.nl_binds, tb)})
            return wrap(Let(e.nl_binds, tb, self.expr(e.bound, m1), self.expr(e.body, m2)))
        if isinstance(e, UnpackNl):
            names = {n for n, _ in e.binds}
            rest = free_nl(e.body) - names
            tb = tuple((self.tname(n), t) for n, t in e.binds)
            if e.source in rest:
                # the tuple stays live in the body: fan its tangent out
                wrap, (m_src, m_body) = self.share(tmap, [[e.source], sorted(rest)])
                src_t = m_src[e.source]
            else:
                wrap, (m_body,) = self.share(tmap, [sorted(rest)])
                src_t = tmap[e.source]
            m_body = dict(m_body)
            m_body.update({n: tn for (n, _), (tn, _) in zip(e.binds, tb)})
            inner = UnpackLin(tb, src_t, self.expr(e.body, m_body))
            return wrap(UnpackNl(e.binds, e.source, inner))
        raise JvpError(f"linear syntax cannot be differentiated: {type(e).__name__}")

    def types_of_tuple(self, e: NlTuple) -> Ty:
        return Tup(tuple(self.types[v] for v in e.vars))

    def prim(self, e: Prim, tmap) -> Expr:
        f = self.supply.fresh
        y = f("y")
        R = ((y, REAL),)
        wrap, ts = self.occ(tmap, e.args)
        t = f("dy")
        done = Ret((y,), (t,))
        if e.op == "sin":
            (v,), (dv,) = e.args, ts
            c = f("c")
            body = Let(R, (), e, Let(((c, REAL),), (), Prim("cos", (v,)), Let((), ((t, REAL),), LinScale(c, dv), done)))
        elif e.op == "cos":
            (v,), (dv,) = e.args, ts
            s, m, n = f("s"), f("m"), f("n")
            body = Let(
                R,
                (),
                e,
                Let(
                    ((s, REAL),),
                    (),
                    Prim("sin", (v,)),
                    Let(
                        ((m, REAL),),
                        (),
                        Lit(-1.0),
                        Let(((n, REAL),), (), Prim("mul", (m, s)), Let((), ((t, REAL),), LinScale(n, dv), done)),
                    ),
                ),
            )
        elif e.op == "exp":
            (dv,) = ts
            body = Let(R, (), e, Let((), ((t, REAL),), LinScale(y, dv), done))
        elif e.op == "add":
            da, db = ts
            body = Let(R, (), e, Let((), ((t, REAL),), LinAdd(da, db), done))
        elif e.op == "mul":
            (a, b), (da, db) = e.args, ts
            t1, t2 = f("dy"), f("dy")
            body = Let(
                R,
                (),
                e,
                Let(
                    (),
                    ((t1, REAL),),
                    LinScale(a, db),
                    Let((), ((t2, REAL),), LinScale(b, da), Let((), ((t, REAL),), LinAdd(t1, t2), done)),
                ),
            )
        else:
            raise JvpError(f"no derivative rule for {e.op!r}")
        return wrap(body)


def _types_in(d: FuncDef) -> dict[str, Ty]:
    ty = dict(d.nl_params + d.lin_params)
    for x in walk(d.body):
        ty.update(binders_of(x))
    return ty


def jvp_def(d: FuncDef, supply: NameSupply) -> FuncDef:
    if _uses_linear_syntax(d):
        raise JvpError(f"{d.name} uses linear syntax; only non-linear definitions can be differentiated")
    d = uniquify(d, supply)
    j = _Jvp(supply, _types_in(d))
    tparams = tuple((j.tname(n), t) for n, t in d.nl_params)
    tmap = {n: tn for (n, _), (tn, _) in zip(d.nl_params, tparams)}
    body = j.expr(d.body, tmap)
    return FuncDef(jvp_name(d.name), d.nl_params, tparams, d.nl_ret, d.nl_ret, body)


def jvp(p: Program, roots, supply: NameSupply | None = None) -> Program:
    """Add ``f.jvp`` for every root and every definition reachable from it."""
    roots = [roots] if isinstance(roots, str) else list(roots)
    for r in roots:
        if r not in p:
            raise JvpError(f"unknown function {r!r}")
    supply = supply or NameSupply.for_program(p)
    new = []
    for d in reachable(p, roots):
        if jvp_name(d.name) in p:
            continue
        new.append(jvp_def(d, supply))
    return p.extend(new)
