"""Abstract syntax of Linear A.

Every expression is arity-indexed: it returns ``m`` non-linear and ``n``
linear results.  Operand positions hold variable names only (A-normal form).
Whether a variable is linear is decided by the side of the semicolon it was
bound on, never by its spelling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

# -- types ------------------------------------------------------------------


@dataclass(frozen=True)
class Real:
    def __str__(self) -> str:
        return "R"


@dataclass(frozen=True)
class Tup:
    elems: tuple["Ty", ...]

    def __str__(self) -> str:
        return "(tup" + "".join(" " + str(t) for t in self.elems) + ")"


Ty = Union[Real, Tup]
REAL = Real()

Binder = tuple[str, Ty]


def scalar_count(ty: Ty) -> int:
    """Number of real-scalar leaves in a type."""
    if isinstance(ty, Real):
        return 1
    return sum(scalar_count(t) for t in ty.elems)


# -- expressions --------------------------------------------------------------


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Ret(Expr):
    nl: tuple[str, ...]
    lin: tuple[str, ...]


@dataclass(frozen=True)
class Let(Expr):
    nl_binds: tuple[Binder, ...]
    lin_binds: tuple[Binder, ...]
    bound: Expr
    body: Expr


@dataclass(frozen=True)
class UnpackNl(Expr):
    binds: tuple[Binder, ...]
    source: str
    body: Expr


@dataclass(frozen=True)
class UnpackLin(Expr):
    binds: tuple[Binder, ...]
    source: str
    body: Expr


@dataclass(frozen=True)
class Call(Expr):
    callee: str
    nl_args: tuple[str, ...]
    lin_args: tuple[str, ...]


@dataclass(frozen=True)
class NlVar(Expr):
    v: str


@dataclass(frozen=True)
class Lit(Expr):
    value: float


@dataclass(frozen=True)
class NlTuple(Expr):
    vars: tuple[str, ...]


PRIM_ARITY = {"sin": 1, "cos": 1, "exp": 1, "add": 2, "mul": 2}


@dataclass(frozen=True)
class Prim(Expr):
    op: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class LinVar(Expr):
    v: str


@dataclass(frozen=True)
class LinZero(Expr):
    ty: Ty


@dataclass(frozen=True)
class LinTuple(Expr):
    vars: tuple[str, ...]


@dataclass(frozen=True)
class LinAdd(Expr):
    a: str
    b: str


@dataclass(frozen=True)
class LinScale(Expr):
    coeff: str
    arg: str


@dataclass(frozen=True)
class Dup(Expr):
    v: str


@dataclass(frozen=True)
class Drop(Expr):
    inner: Expr


NL_LEAVES = (NlVar, Lit, NlTuple, Prim)
LIN_LEAVES = (LinVar, LinZero, LinTuple, LinAdd, LinScale)


# -- definitions and programs ---------------------------------------------------


@dataclass(frozen=True)
class FuncDef:
    name: str
    nl_params: tuple[Binder, ...]
    lin_params: tuple[Binder, ...]
    nl_ret: tuple[Ty, ...]
    lin_ret: tuple[Ty, ...]
    body: Expr

    @property
    def arity(self) -> tuple[int, int]:
        return len(self.nl_ret), len(self.lin_ret)

    @property
    def is_nonlinear(self) -> bool:
        """True when the signature mentions no linear values."""
        return not self.lin_params and not self.lin_ret


@dataclass(frozen=True)
class Program:
    defs: tuple[FuncDef, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "defs", tuple(self.defs))

    def lookup(self, name: str) -> FuncDef:
        for d in self.defs:
            if d.name == name:
                return d
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(d.name == name for d in self.defs)

    def table(self) -> dict[str, FuncDef]:
        return {d.name: d for d in self.defs}

    def extend(self, new_defs: Iterable[FuncDef]) -> "Program":
        return Program(self.defs + tuple(new_defs))


# -- structural helpers -----------------------------------------------------------


def arity(e: Expr, sigs: Mapping[str, FuncDef]) -> tuple[int, int]:
    """(non-linear, linear) result counts of ``e``.

    ``sigs`` is only consulted for calls.
    """
    while isinstance(e, (Let, UnpackNl, UnpackLin)):
        e = e.body
    if isinstance(e, Ret):
        return len(e.nl), len(e.lin)
    if isinstance(e, Call):
        return sigs[e.callee].arity
    if isinstance(e, NL_LEAVES):
        return 1, 0
    if isinstance(e, LIN_LEAVES):
        return 0, 1
    if isinstance(e, Dup):
        return 0, 2
    if isinstance(e, Drop):
        return 0, 0
    raise TypeError(f"not an expression: {e!r}")


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Let):
        return (e.bound, e.body)
    if isinstance(e, (UnpackNl, UnpackLin)):
        return (e.body,)
    if isinstance(e, Drop):
        return (e.inner,)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal of all sub-expressions, ``e`` included."""
    stack = [e]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(children(cur)))


def binders_of(e: Expr) -> tuple[Binder, ...]:
    if isinstance(e, Let):
        return e.nl_binds + e.lin_binds
    if isinstance(e, (UnpackNl, UnpackLin)):
        return e.binds
    return ()


def local_refs(e: Expr) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Variables referenced directly by the node itself (not its children)."""
    if isinstance(e, Ret):
        return e.nl, e.lin
    if isinstance(e, Call):
        return e.nl_args, e.lin_args
    if isinstance(e, NlVar):
        return (e.v,), ()
    if isinstance(e, (NlTuple,)):
        return e.vars, ()
    if isinstance(e, Prim):
        return e.args, ()
    if isinstance(e, LinVar):
        return (), (e.v,)
    if isinstance(e, LinTuple):
        return (), e.vars
    if isinstance(e, LinAdd):
        return (), (e.a, e.b)
    if isinstance(e, LinScale):
        return (e.coeff,), (e.arg,)
    if isinstance(e, Dup):
        return (), (e.v,)
    if isinstance(e, UnpackNl):
        return (e.source,), ()
    if isinstance(e, UnpackLin):
        return (), (e.source,)
    return (), ()


def free_vars(e: Expr) -> tuple[frozenset[str], frozenset[str]]:
    """Free (non-linear, linear) variables of ``e``."""
    nl, lin = local_refs(e)
    fnl, flin = set(nl), set(lin)
    if isinstance(e, Let):
        bnl, blin = free_vars(e.bound)
        cnl, clin = free_vars(e.body)
        names = {n for n, _ in binders_of(e)}
        fnl |= bnl | (cnl - names)
        flin |= blin | (clin - names)
    elif isinstance(e, (UnpackNl, UnpackLin)):
        cnl, clin = free_vars(e.body)
        names = {n for n, _ in e.binds}
        fnl |= cnl - names
        flin |= clin - names
    elif isinstance(e, Drop):
        cnl, clin = free_vars(e.inner)
        fnl |= cnl
        flin |= clin
    return frozenset(fnl), frozenset(flin)


def free_nl(e: Expr) -> frozenset[str]:
    return free_vars(e)[0]


def free_lin(e: Expr) -> frozenset[str]:
    return free_vars(e)[1]


def ordered_refs(e: Expr) -> list[str]:
    """Every variable reference in ``e``, in source order (with repeats)."""
    out: list[str] = []

    def go(x: Expr) -> None:
        if isinstance(x, (UnpackNl, UnpackLin)):
            out.append(x.source)
            go(x.body)
            return
        nl, lin = local_refs(x)
        if isinstance(x, LinScale):
            out.extend((x.coeff, x.arg))
        else:
            out.extend(nl)
            out.extend(lin)
        for c in children(x):
            go(c)

    go(e)
    return out


def calls_in(e: Expr) -> list[str]:
    return [x.callee for x in walk(e) if isinstance(x, Call)]


def reachable(p: Program, roots: Iterable[str]) -> list[FuncDef]:
    """Definitions reachable from ``roots`` through calls, in program order."""
    table = p.table()
    seen: set[str] = set()
    todo = list(roots)
    while todo:
        name = todo.pop()
        if name in seen:
            continue
        if name not in table:
            raise KeyError(name)
        seen.add(name)
        todo.extend(calls_in(table[name].body))
    return [d for d in p.defs if d.name in seen]


def rename(e: Expr, mapping: Mapping[str, str]) -> Expr:
    """Rename free variables; assumes no binder in ``e`` captures a target."""
    if not mapping:
        return e
    m = mapping.get

    def r(v: str) -> str:
        return m(v, v)

    def rs(vs: tuple[str, ...]) -> tuple[str, ...]:
        return tuple(m(v, v) for v in vs)

    if isinstance(e, Ret):
        return Ret(rs(e.nl), rs(e.lin))
    if isinstance(e, Let):
        inner = {k: v for k, v in mapping.items() if k not in {n for n, _ in binders_of(e)}}
        return Let(e.nl_binds, e.lin_binds, rename(e.bound, mapping), rename(e.body, inner))
    if isinstance(e, (UnpackNl, UnpackLin)):
        inner = {k: v for k, v in mapping.items() if k not in {n for n, _ in e.binds}}
        return type(e)(e.binds, r(e.source), rename(e.body, inner))
    if isinstance(e, Call):
        return Call(e.callee, rs(e.nl_args), rs(e.lin_args))
    if isinstance(e, NlVar):
        return NlVar(r(e.v))
    if isinstance(e, NlTuple):
        return NlTuple(rs(e.vars))
    if isinstance(e, Prim):
        return Prim(e.op, rs(e.args))
    if isinstance(e, LinVar):
        return LinVar(r(e.v))
    if isinstance(e, LinTuple):
        return LinTuple(rs(e.vars))
    if isinstance(e, LinAdd):
        return LinAdd(r(e.a), r(e.b))
    if isinstance(e, LinScale):
        return LinScale(r(e.coeff), r(e.arg))
    if isinstance(e, Dup):
        return Dup(r(e.v))
    if isinstance(e, Drop):
        return Drop(rename(e.inner, mapping))
    return e


def mk_let(nl_binds, lin_binds, bound: Expr, body: Expr) -> Expr:
    """Build a ``let``, dropping cost-free administrative shells.

    ``let (;) (ret (;)) e`` becomes ``e`` and ``let (xs; ys) e (ret (xs; ys))``
    becomes ``e``.
    """
    nl_binds, lin_binds = tuple(nl_binds), tuple(lin_binds)
    if not nl_binds and not lin_binds and bound == Ret((), ()):
        return body
    if (
        isinstance(body, Ret)
        and body.nl == tuple(n for n, _ in nl_binds)
        and body.lin == tuple(n for n, _ in lin_binds)
    ):
        return bound
    return Let(nl_binds, lin_binds, bound, body)


# -- fresh names --------------------------------------------------------------------

_HINT_CLEAN = re.compile(r"[^A-Za-z0-9_]")


@dataclass
class NameSupply:
    """Deterministic source of names that cannot clash with source identifiers.

    Generated names start with ``%``.  Names listed in ``taken`` (for example
    ``%``-names read back from a previously transformed file) are skipped.
    """

    counter: int = 0
    prefix: str = "%"
    taken: set[str] = field(default_factory=set)

    def fresh(self, hint: str = "t") -> str:
        base = _HINT_CLEAN.sub("", hint.lstrip(self.prefix)).rstrip("0123456789")
        if not base or not (base[0].isalpha() or base[0] == "_"):
            base = "t" + base
        while True:
            name = f"{self.prefix}{base}{self.counter}"
            self.counter += 1
            if name not in self.taken:
                self.taken.add(name)
                return name

    @classmethod
    def for_program(cls, p: Program) -> "NameSupply":
        return cls(taken=all_names(p))


def fresh_name(supply: NameSupply, hint: str) -> str:
    return supply.fresh(hint)


def all_names(p: Program) -> set[str]:
    names: set[str] = set()
    for d in p.defs:
        names.update(n for n, _ in d.nl_params + d.lin_params)
        for e in walk(d.body):
            names.update(n for n, _ in binders_of(e))
            nl, lin = local_refs(e)
            names.update(nl)
            names.update(lin)
    return names


def uniquify(d: FuncDef, supply: NameSupply) -> FuncDef:
    """Alpha-rename so that no variable name is bound twice anywhere in ``d``.

    Sibling scopes may legally reuse a name; transformations that hoist
    bindings out of their scopes need every binder to be distinct.
    """
    seen = {n for n, _ in d.nl_params + d.lin_params}

    def fresh_binds(binds, env):
        out, env = [], dict(env)
        for n, t in binds:
            if n in seen:
                new = supply.fresh(n)
                env[n] = new
                n = new
            else:
                env.pop(n, None)
            seen.add(n)
            out.append((n, t))
        return tuple(out), env

    def go(e: Expr, env: dict[str, str]) -> Expr:
        if isinstance(e, Let):
            bound = go(e.bound, env)
            nlb, env2 = fresh_binds(e.nl_binds, env)
            linb, env2 = fresh_binds(e.lin_binds, env2)
            return Let(nlb, linb, bound, go(e.body, env2))
        if isinstance(e, (UnpackNl, UnpackLin)):
            src = env.get(e.source, e.source)
            binds, env2 = fresh_binds(e.binds, env)
            return type(e)(binds, src, go(e.body, env2))
        if isinstance(e, Drop):
            return Drop(go(e.inner, env))
        return rename(e, env)

    return FuncDef(d.name, d.nl_params, d.lin_params, d.nl_ret, d.lin_ret, go(d.body, {}))


# -- size metric ----------------------------------------------------------------------


def ty_size(t: Ty) -> int:
    if isinstance(t, Real):
        return 1
    return 1 + sum(ty_size(x) for x in t.elems)


def _binders_size(bs) -> int:
    return sum(1 + ty_size(t) for _, t in bs)


def expr_size(e: Expr) -> int:
    """Grammar-node count of an expression.

    Each production node counts 1, each variable reference 1, each binder 1
    and each type node 1.  Single-variable leaves (``x``, ``dx``) are a
    reference and count 1 in total.
    """
    if isinstance(e, (NlVar, LinVar, Lit)):
        return 1
    if isinstance(e, LinZero):
        return 1 + ty_size(e.ty)
    nl, lin = local_refs(e)
    n = 1 + len(nl) + len(lin) + _binders_size(binders_of(e))
    return n + sum(expr_size(c) for c in children(e))


def def_size(d: FuncDef) -> int:
    return (
        1
        + _binders_size(d.nl_params + d.lin_params)
        + sum(ty_size(t) for t in d.nl_ret + d.lin_ret)
        + expr_size(d.body)
    )


def program_size(p: Program) -> int:
    return sum(def_size(d) for d in p.defs)
