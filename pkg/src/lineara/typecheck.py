"""Linear type system for Linear A, plus the Linear B membership check.

Linear variables must be consumed exactly once (``dup`` and ``drop`` being
the only ways to adjust multiplicity); non-linear variables at least once.
Environment splitting is computed bottom-up: every sub-expression reports
which variables it consumed, and joins check that linear consumption sets
are disjoint.  Every error names the typing rule that rejected the program.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .ir import (
    PRIM_ARITY,
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
    arity,
    children,
    free_lin,
)


class LinearTypeError(Exception):
    """A program rejected by the type system; ``rule`` names the failing rule."""

    def __init__(self, rule: str, message: str, func: str | None = None):
        where = f" in {func}" if func else ""
        super().__init__(f"{rule}: {message}{where}")
        self.rule = rule
        self.message = message
        self.func = func


@dataclass(frozen=True)
class TypeReport:
    nl_tys: tuple[Ty, ...]
    lin_tys: tuple[Ty, ...]
    consumed_nl: frozenset[str]
    consumed_lin: frozenset[str]

    @property
    def arity(self) -> tuple[int, int]:
        return len(self.nl_tys), len(self.lin_tys)


def _side(nl, lin) -> str:
    left, right = " ".join(map(str, nl)), " ".join(map(str, lin))
    return f"({left}{' ' if left else ''};{' ' if right else ''}{right})"


@dataclass(frozen=True)
class Signature:
    nl_params: tuple[Ty, ...]
    lin_params: tuple[Ty, ...]
    nl_ret: tuple[Ty, ...]
    lin_ret: tuple[Ty, ...]

    def __str__(self) -> str:
        return f"{_side(self.nl_params, self.lin_params)} -> {_side(self.nl_ret, self.lin_ret)}"


def signature(d: FuncDef) -> Signature:
    return Signature(
        tuple(t for _, t in d.nl_params), tuple(t for _, t in d.lin_params), d.nl_ret, d.lin_ret
    )


_E = frozenset()


class _Checker:
    def __init__(self, sigs: Mapping[str, FuncDef], func: str | None = None):
        self.sigs = sigs
        self.func = func

    def fail(self, rule, msg):
        raise LinearTypeError(rule, msg, self.func)

    def nl_var(self, rule, v, nl, lin) -> Ty:
        if v in nl:
            return nl[v]
        if v in lin:
            self.fail(rule, f"linear variable {v!r} used in a non-linear position")
        self.fail(rule, f"unknown variable {v!r}")

    def lin_var(self, rule, v, nl, lin) -> Ty:
        if v in lin:
            return lin[v]
        if v in nl:
            self.fail(rule, f"non-linear variable {v!r} used in a linear position")
        self.fail(rule, f"unknown variable {v!r}")

    def distinct(self, rule, vs):
        seen = set()
        for v in vs:
            if v in seen:
                self.fail(rule, f"linear variable {v!r} used twice")
            seen.add(v)

    def bind(self, rule, binds, nl, lin):
        seen = set()
        for n, _ in binds:
            if n in nl or n in lin:
                self.fail(rule, f"shadowing: {n!r} is already bound")
            if n in seen:
                self.fail(rule, f"duplicate binder {n!r}")
            seen.add(n)

    def check_used(self, rule, nl_binds, lin_binds, rep: TypeReport):
        for n, _ in nl_binds:
            if n not in rep.consumed_nl:
                self.fail(rule, f"non-linear variable {n!r} unused")
        for n, _ in lin_binds:
            if n not in rep.consumed_lin:
                self.fail(rule, f"linear variable {n!r} unused")

    def check(self, e: Expr, nl: Mapping[str, Ty], lin: Mapping[str, Ty]) -> TypeReport:
        if isinstance(e, Ret):
            nt = tuple(self.nl_var("TypeRet", v, nl, lin) for v in e.nl)
            self.distinct("TypeRet", e.lin)
            lt = tuple(self.lin_var("TypeRet", v, nl, lin) for v in e.lin)
            return TypeReport(nt, lt, frozenset(e.nl), frozenset(e.lin))

        if isinstance(e, Let):
            r1 = self.check(e.bound, nl, lin)
            want = (len(e.nl_binds), len(e.lin_binds))
            if r1.arity != want:
                self.fail("TypeLet", f"bound expression returns {r1.arity} results, binders expect {want}")
            for (n, t), got in zip(e.nl_binds + e.lin_binds, r1.nl_tys + r1.lin_tys):
                if t != got:
                    self.fail("TypeLet", f"binder {n!r} declared {t} but bound to {got}")
            self.bind("TypeLet", e.nl_binds + e.lin_binds, nl, lin)
            nl2 = dict(nl)
            nl2.update(e.nl_binds)
            lin2 = dict(lin)
            lin2.update(e.lin_binds)
            r2 = self.check(e.body, nl2, lin2)
            self.check_used("TypeLet", e.nl_binds, e.lin_binds, r2)
            names = {n for n, _ in e.nl_binds + e.lin_binds}
            body_lin = r2.consumed_lin - names
            twice = r1.consumed_lin & body_lin
            if twice:
                self.fail("TypeLet", f"linear variable {sorted(twice)[0]!r} used twice")
            return TypeReport(
                r2.nl_tys, r2.lin_tys, r1.consumed_nl | (r2.consumed_nl - names), r1.consumed_lin | body_lin
            )

        if isinstance(e, (UnpackNl, UnpackLin)):
            linear = isinstance(e, UnpackLin)
            rule = "TypeLinUnpack" if linear else "TypeUnpack"
            src_t = (self.lin_var if linear else self.nl_var)(rule, e.source, nl, lin)
            if not isinstance(src_t, Tup) or len(src_t.elems) != len(e.binds):
                self.fail(rule, f"cannot unpack {e.source!r} of type {src_t} into {len(e.binds)} components")
            for (n, t), got in zip(e.binds, src_t.elems):
                if t != got:
                    self.fail(rule, f"component {n!r} declared {t} but has type {got}")
            self.bind(rule, e.binds, nl, lin)
            if linear:
                lin2 = {k: v for k, v in lin.items() if k != e.source}
                lin2.update(e.binds)
                r = self.check(e.body, nl, lin2)
                self.check_used(rule, (), e.binds, r)
                names = {n for n, _ in e.binds}
                return TypeReport(
                    r.nl_tys, r.lin_tys, r.consumed_nl, (r.consumed_lin - names) | {e.source}
                )
            nl2 = dict(nl)
            nl2.update(e.binds)
            r = self.check(e.body, nl2, lin)
            self.check_used(rule, e.binds, (), r)
            names = {n for n, _ in e.binds}
            return TypeReport(r.nl_tys, r.lin_tys, (r.consumed_nl - names) | {e.source}, r.consumed_lin)

        if isinstance(e, Call):
            if e.callee not in self.sigs:
                self.fail("TypeApp", f"call to unknown or later-defined function {e.callee!r}")
            d = self.sigs[e.callee]
            if (len(e.nl_args), len(e.lin_args)) != (len(d.nl_params), len(d.lin_params)):
                self.fail(
                    "TypeApp",
                    f"{e.callee} expects ({len(d.nl_params)}; {len(d.lin_params)}) arguments, "
                    f"got ({len(e.nl_args)}; {len(e.lin_args)})",
                )
            self.distinct("TypeApp", e.lin_args)
            for v, (_, t) in zip(e.nl_args, d.nl_params):
                got = self.nl_var("TypeApp", v, nl, lin)
                if got != t:
                    self.fail("TypeApp", f"argument {v!r} has type {got}, {e.callee} expects {t}")
            for v, (_, t) in zip(e.lin_args, d.lin_params):
                got = self.lin_var("TypeApp", v, nl, lin)
                if got != t:
                    self.fail("TypeApp", f"argument {v!r} has type {got}, {e.callee} expects {t}")
            return TypeReport(d.nl_ret, d.lin_ret, frozenset(e.nl_args), frozenset(e.lin_args))

        if isinstance(e, NlVar):
            t = self.nl_var("TypeVar", e.v, nl, lin)
            return TypeReport((t,), (), frozenset({e.v}), _E)
        if isinstance(e, Lit):
            return TypeReport((REAL,), (), _E, _E)
        if isinstance(e, NlTuple):
            ts = tuple(self.nl_var("TypeTup", v, nl, lin) for v in e.vars)
            return TypeReport((Tup(ts),), (), frozenset(e.vars), _E)
        if isinstance(e, Prim):
            rule = "TypePrim1" if PRIM_ARITY.get(e.op) == 1 else "TypePrim2"
            if e.op not in PRIM_ARITY or len(e.args) != PRIM_ARITY[e.op]:
                self.fail(rule, f"bad primitive application {e.op}/{len(e.args)}")
            for v in e.args:
                t = self.nl_var(rule, v, nl, lin)
                if not isinstance(t, Real):
                    self.fail(rule, f"{e.op} expects real scalars, {v!r} has type {t}")
            return TypeReport((REAL,), (), frozenset(e.args), _E)

        if isinstance(e, LinVar):
            t = self.lin_var("TypeLinVar", e.v, nl, lin)
            return TypeReport((), (t,), _E, frozenset({e.v}))
        if isinstance(e, LinZero):
            return TypeReport((), (e.ty,), _E, _E)
        if isinstance(e, LinTuple):
            self.distinct("TypeLinTup", e.vars)
            ts = tuple(self.lin_var("TypeLinTup", v, nl, lin) for v in e.vars)
            return TypeReport((), (Tup(ts),), _E, frozenset(e.vars))
        if isinstance(e, LinAdd):
            self.distinct("TypeLinPlus", (e.a, e.b))
            ta = self.lin_var("TypeLinPlus", e.a, nl, lin)
            tb = self.lin_var("TypeLinPlus", e.b, nl, lin)
            if ta != tb:
                self.fail("TypeLinPlus", f"cannot add {ta} and {tb}")
            return TypeReport((), (ta,), _E, frozenset({e.a, e.b}))
        if isinstance(e, LinScale):
            tc = self.nl_var("TypeLinMul", e.coeff, nl, lin)
            if not isinstance(tc, Real):
                self.fail("TypeLinMul", f"scaling coefficient {e.coeff!r} must be a real scalar, has type {tc}")
            t = self.lin_var("TypeLinMul", e.arg, nl, lin)
            return TypeReport((), (t,), frozenset({e.coeff}), frozenset({e.arg}))
        if isinstance(e, Dup):
            t = self.lin_var("TypeDup", e.v, nl, lin)
            return TypeReport((), (t, t), _E, frozenset({e.v}))
        if isinstance(e, Drop):
            r = self.check(e.inner, nl, lin)
            return TypeReport((), (), r.consumed_nl, r.consumed_lin)
        raise TypeError(f"not an expression: {e!r}")

    def check_def(self, d: FuncDef) -> TypeReport:
        self.func = d.name
        self.bind("TypeDef", d.nl_params + d.lin_params, {}, {})
        r = self.check(d.body, dict(d.nl_params), dict(d.lin_params))
        if r.nl_tys != d.nl_ret or r.lin_tys != d.lin_ret:
            self.fail("TypeDef", f"body returns {_side(r.nl_tys, r.lin_tys)}, declared {_side(d.nl_ret, d.lin_ret)}")
        self.check_used("TypeDef", d.nl_params, d.lin_params, r)
        return r


def check_expr(
    sigs: Mapping[str, FuncDef], e: Expr, nl_env: Mapping[str, Ty], lin_env: Mapping[str, Ty]
) -> TypeReport:
    """Type an expression in the given environments.

    Unlike a definition check, environment variables the expression does not
    consume are not an error here; inspect ``consumed_*`` on the report.
    """
    return _Checker(sigs).check(e, nl_env, lin_env)


def check_def(sigs: Mapping[str, FuncDef], d: FuncDef) -> TypeReport:
    return _Checker(sigs).check_def(d)


def typecheck_program(p: Program) -> dict[str, Signature]:
    """Check every definition in order; returns each function's signature."""
    sigs: dict[str, FuncDef] = {}
    out: dict[str, Signature] = {}
    for d in p.defs:
        if d.name in sigs:
            raise LinearTypeError("TypeDef", f"duplicate function name {d.name!r}", d.name)
        check_def(sigs, d)
        sigs[d.name] = d
        out[d.name] = signature(d)
    return out


# -- Linear B ------------------------------------------------------------------


@dataclass(frozen=True)
class LinearBReport:
    ok: bool
    violation: str | None = None


def linear_b_violation(sigs: Mapping[str, FuncDef], e: Expr) -> str | None:
    """First Linear B violation in ``e`` (pre-order), or None."""
    stack = [e]
    while stack:
        x = stack.pop()
        m, n = arity(x, sigs)
        if m and n:
            return f"expression returns mixed results ({m} non-linear, {n} linear)"
        if m:
            reads = free_lin(x)
            if reads:
                return f"non-linear expression reads linear variable {sorted(reads)[0]!r}"
        stack.extend(reversed(children(x)))
    return None


def is_linear_b(p: Program) -> dict[str, LinearBReport]:
    sigs = p.table()
    out = {}
    for d in p.defs:
        if d.nl_ret and d.lin_ret:
            out[d.name] = LinearBReport(False, "definition returns mixed results")
            continue
        v = linear_b_violation(sigs, d.body)
        out[d.name] = LinearBReport(v is None, v)
    return out
