"""Independent checking machinery: random well-typed programs, finite
differences, dot products and the property harnesses built on them.

The generator works block by block.  A block owns some linear variables
(which it must consume) and binds non-linear variables (which it must use).
It emits a run of statements, then a ``ret`` and whatever ``drop`` lets are
needed to balance the books.  Value magnitudes are tracked conservatively so
that inputs in [-1, 1] never overflow and stay well inside the range where
the floating-point tolerances make sense.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .interp import Value, as_value, evaluate, leaves, value_scalars
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
    scalar_count,
)
from .typecheck import typecheck_program

PRIMS = ("sin", "cos", "exp", "add", "mul")

DEFAULT_WEIGHTS = {
    # statement forms
    "lit": 1.0,
    "prim": 3.0,
    "nltuple": 0.6,
    "unpack": 0.6,
    "nlvar": 0.3,
    "lzero": 0.6,
    "ltuple": 0.6,
    "lunpack": 0.6,
    "ladd": 1.5,
    "lscale": 2.0,
    "dup": 1.2,
    "drop": 0.8,
    "linvar": 0.3,
    "call": 1.0,
    "block": 1.0,
    # primitives
    "sin": 1.0,
    "cos": 1.0,
    "exp": 0.7,
    "add": 1.0,
    "mul": 1.2,
}

NL_FORMS = ("lit", "prim", "nltuple", "unpack", "nlvar", "call", "block", "drop")
LIN_FORMS = ("lzero", "ltuple", "lunpack", "ladd", "lscale", "dup", "drop", "linvar")

# magnitude caps (inputs are drawn from [-1, 1])
NL_CAP = 100.0
LIN_CAP = 1e3


@dataclass
class GenConfig:
    seed: int = 0
    max_depth: int = 3
    max_arity: int = 3
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    linear_fraction: float = 0.5
    # "a": mixed Linear A, "b": linear Linear B definition, "nl": non-linear only
    mode: str = "a"
    n_helpers: int = 1
    max_stmts: int = 5
    scalar_output: bool = False
    closed: bool = False

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.mode not in ("a", "b", "nl"):
            raise ValueError(f"unknown generator mode {self.mode!r}")
        if any(w < 0 for w in self.weights.values()) or not any(self.weights.values()):
            raise ValueError("weights must be non-negative and not all zero")


@dataclass
class _Var:
    ty: Ty
    bound: float


class _Scope:
    def __init__(self, parent: "_Scope | None" = None):
        self.parent = parent
        self.nl: dict[str, _Var] = {}
        self.unused: list[str] = []
        self.lin: dict[str, _Var] = {}

    def visible(self) -> dict[str, _Var]:
        out = self.parent.visible() if self.parent else {}
        out.update(self.nl)
        return out

    def bind_nl(self, name: str, v: _Var) -> None:
        self.nl[name] = v
        self.unused.append(name)

    def use(self, name: str) -> None:
        s = self
        while s is not None:
            if name in s.nl:
                if name in s.unused:
                    s.unused.remove(name)
                return
            s = s.parent


class _Gen:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.helpers: list[tuple[FuncDef, list[float], list[float]]] = []
        self.counter = 0

    # -- small utilities ---------------------------------------------------------

    def name(self, hint: str) -> str:
        self.counter += 1
        return f"{hint}{self.counter}"

    def pick(self, options: Sequence[str]) -> str:
        ws = [self.cfg.weights.get(o, 0.0) for o in options]
        if not any(ws):
            return self.rng.choice(list(options))
        return self.rng.choices(list(options), weights=ws)[0]

    def rand_ty(self, depth: int = 2) -> Ty:
        if depth <= 0 or self.rng.random() < 0.75:
            return REAL
        return Tup(tuple(self.rand_ty(depth - 1) for _ in range(self.rng.randint(0, 2))))

    def lit(self) -> float:
        return round(self.rng.uniform(-1.0, 1.0), 3)

    # -- blocks --------------------------------------------------------------------

    def block(self, sc: _Scope, depth: int, kind: str, top: bool = False):
        """Generate an expression for ``sc``; ``kind`` is "nl", "lin" or "mixed".

        Returns (expr, nl result vars, lin result vars) where result vars are
        _Var records describing type and magnitude.
        """
        items: list[tuple] = []
        if depth > 1:
            for _ in range(self.rng.randint(1 if top else 0, self.cfg.max_stmts)):
                self.statement(sc, depth, kind, items)
            if top and kind in ("lin", "mixed") and not sc.lin and self.cfg.mode != "nl":
                self.emit_lin(sc, "lzero", items, depth)
        final, nl_res, lin_res = self.finish(sc, depth, kind, items, top)
        return self.fold(items, final), nl_res, lin_res

    def fold(self, items, final: Expr) -> Expr:
        out = final
        for it in reversed(items):
            tag = it[0]
            if tag == "let":
                out = Let(it[1], it[2], it[3], out)
            elif tag == "untup":
                out = UnpackNl(it[1], it[2], out)
            else:
                out = UnpackLin(it[1], it[2], out)
        return out

    def finish(self, sc: _Scope, depth: int, kind: str, items, top: bool):
        cfg = self.cfg
        lin_out: list[str] = []
        if kind != "nl":
            avail = list(sc.lin)
            self.rng.shuffle(avail)
            if depth == 1:
                lin_out = avail
            else:
                k = self.rng.randint(1 if avail else 0, min(len(avail), cfg.max_arity))
                lin_out = avail[:k]
        rest = [v for v in sc.lin if v not in lin_out]
        if rest:
            if len(rest) == 1 and self.rng.random() < 0.5:
                items.append(("let", (), (), Drop(LinVar(rest[0]))))
            else:
                items.append(("let", (), (), Drop(Ret((), tuple(rest)))))
        lin_res = [sc.lin[v] for v in lin_out]

        nl_out: list[str] = []
        vis = sc.visible()
        if kind == "nl" or (kind == "mixed"):
            if depth == 1:
                nl_out = list(sc.unused)
                if not nl_out and vis and self.rng.random() < 0.5:
                    nl_out = [self.rng.choice(list(vis))]
            elif top and cfg.scalar_output:
                reals = [v for v in vis if isinstance(vis[v].ty, Real)]
                nl_out = [self.rng.choice(reals)]
            else:
                pool = list(sc.unused) + [v for v in vis if v not in sc.unused]
                k = self.rng.randint(1 if kind == "nl" and pool else 0, min(len(pool), cfg.max_arity))
                nl_out = pool[:k]
                if self.rng.random() < 0.2 and nl_out:
                    nl_out.append(nl_out[0])  # repeated non-linear result
        for v in nl_out:
            sc.use(v)
        leftover = list(sc.unused)
        if leftover:
            if len(leftover) == 1 and self.rng.random() < 0.5:
                items.append(("let", (), (), Drop(NlVar(leftover[0]))))
            else:
                items.append(("let", (), (), Drop(Ret(tuple(leftover), ()))))
            for v in leftover:
                sc.use(v)
        nl_res = [vis[v] for v in nl_out]
        return Ret(tuple(nl_out), tuple(lin_out)), nl_res, lin_res

    # -- statements --------------------------------------------------------------

    def statement(self, sc: _Scope, depth: int, kind: str, items) -> None:
        mode = self.cfg.mode
        forms = list(NL_FORMS)
        if mode != "nl" and (kind != "nl" or mode == "a"):
            forms += [f for f in LIN_FORMS if f not in forms]
        for _ in range(6):
            form = self.pick(forms)
            if form in LIN_FORMS and form != "drop":
                ok = self.emit_lin(sc, form, items, depth)
            else:
                ok = self.emit_nl(sc, form, items, depth, kind)
            if ok:
                return

    def emit_nl(self, sc: _Scope, form: str, items, depth: int, kind: str) -> bool:
        rng = self.rng
        vis = sc.visible()
        reals = [v for v in vis if isinstance(vis[v].ty, Real)]
        if form == "lit":
            c = self.lit()
            n = self.name("c")
            items.append(("let", ((n, REAL),), (), Lit(c)))
            sc.bind_nl(n, _Var(REAL, abs(c)))
            return True
        if form == "prim":
            if not reals:
                return False
            op = self.pick(PRIMS)
            a = rng.choice(reals)
            b = rng.choice(reals)
            ba, bb = vis[a].bound, vis[b].bound
            if op in ("sin", "cos"):
                args, bound = (a,), 1.0
            elif op == "exp":
                if ba > 2.0:
                    return False
                args, bound = (a,), math.exp(ba)
            elif op == "add":
                args, bound = (a, b), ba + bb
            else:
                args, bound = (a, b), ba * bb
            if bound > NL_CAP:
                return False
            n = self.name("v")
            items.append(("let", ((n, REAL),), (), Prim(op, args)))
            for x in args:
                sc.use(x)
            sc.bind_nl(n, _Var(REAL, bound))
            return True
        if form == "nltuple":
            k = rng.randint(0, min(len(vis), self.cfg.max_arity))
            vs = rng.sample(list(vis), k)
            ty = Tup(tuple(vis[v].ty for v in vs))
            n = self.name("tp")
            items.append(("let", ((n, ty),), (), NlTuple(tuple(vs))))
            for v in vs:
                sc.use(v)
            sc.bind_nl(n, _Var(ty, max([vis[v].bound for v in vs], default=0.0)))
            return True
        if form == "nlvar":
            if not vis:
                return False
            v = rng.choice(list(vis))
            n = self.name("a")
            items.append(("let", ((n, vis[v].ty),), (), NlVar(v)))
            sc.use(v)
            sc.bind_nl(n, _Var(vis[v].ty, vis[v].bound))
            return True
        if form == "unpack":
            tups = [v for v in vis if isinstance(vis[v].ty, Tup)]
            if not tups:
                return False
            v = rng.choice(tups)
            t = vis[v].ty
            binds = tuple((self.name("u"), s) for s in t.elems)
            items.append(("untup", binds, v))
            sc.use(v)
            for n, s in binds:
                sc.bind_nl(n, _Var(s, vis[v].bound))
            return True
        if form == "call":
            return self.emit_call(sc, items, kind)
        if form == "block":
            return self.emit_block(sc, items, depth, kind)
        if form == "drop":
            return self.emit_drop(sc, items, depth, kind)
        return False

    def emit_lin(self, sc: _Scope, form: str, items, depth: int) -> bool:
        rng = self.rng
        lin = sc.lin
        if form == "lzero":
            t = self.rand_ty()
            n = self.name("dz")
            items.append(("let", (), ((n, t),), LinZero(t)))
            lin[n] = _Var(t, 0.0)
            return True
        if form == "linvar":
            if not lin:
                return False
            v = rng.choice(list(lin))
            var = lin.pop(v)
            n = self.name("dv")
            items.append(("let", (), ((n, var.ty),), LinVar(v)))
            lin[n] = var
            return True
        if form == "ltuple":
            k = rng.randint(0, min(len(lin), self.cfg.max_arity))
            vs = rng.sample(list(lin), k)
            ty = Tup(tuple(lin[v].ty for v in vs))
            bound = max([lin[v].bound for v in vs], default=0.0)
            for v in vs:
                del lin[v]
            n = self.name("dtp")
            items.append(("let", (), ((n, ty),), LinTuple(tuple(vs))))
            lin[n] = _Var(ty, bound)
            return True
        if form == "lunpack":
            tups = [v for v in lin if isinstance(lin[v].ty, Tup)]
            if not tups:
                return False
            v = rng.choice(tups)
            var = lin.pop(v)
            binds = tuple((self.name("du"), s) for s in var.ty.elems)
            items.append(("luntup", binds, v))
            for n, s in binds:
                lin[n] = _Var(s, var.bound)
            return True
        if form == "ladd":
            by_ty: dict[Ty, list[str]] = {}
            for v, var in lin.items():
                by_ty.setdefault(var.ty, []).append(v)
            pairs = [vs for vs in by_ty.values() if len(vs) >= 2]
            if not pairs:
                return False
            a, b = rng.sample(rng.choice(pairs), 2)
            bound = lin[a].bound + lin[b].bound
            if bound > LIN_CAP:
                return False
            t = lin[a].ty
            del lin[a], lin[b]
            n = self.name("ds")
            items.append(("let", (), ((n, t),), LinAdd(a, b)))
            lin[n] = _Var(t, bound)
            return True
        if form == "lscale":
            vis = sc.visible()
            reals = [v for v in vis if isinstance(vis[v].ty, Real)]
            if not reals or not lin:
                return False
            c = rng.choice(reals)
            v = rng.choice(list(lin))
            bound = vis[c].bound * lin[v].bound
            if bound > LIN_CAP:
                return False
            var = lin.pop(v)
            sc.use(c)
            n = self.name("dm")
            items.append(("let", (), ((n, var.ty),), LinScale(c, v)))
            lin[n] = _Var(var.ty, bound)
            return True
        if form == "dup":
            if not lin:
                return False
            v = rng.choice(list(lin))
            var = lin.pop(v)
            a, b = self.name("dd"), self.name("dd")
            items.append(("let", (), ((a, var.ty), (b, var.ty)), Dup(v)))
            lin[a] = _Var(var.ty, var.bound)
            lin[b] = _Var(var.ty, var.bound)
            return True
        return False

    def child(self, sc: _Scope, give_lin: bool) -> _Scope:
        ch = _Scope(sc)
        if give_lin:
            for v in list(sc.lin):
                if self.rng.random() < 0.5:
                    ch.lin[v] = sc.lin.pop(v)
        return ch

    def child_kind(self, kind: str) -> str:
        mode = self.cfg.mode
        if mode == "nl":
            return "nl"
        if mode == "b":
            if kind == "nl":
                return "nl"
            return "nl" if self.rng.random() > self.cfg.linear_fraction else "lin"
        return self.rng.choice(["nl", "lin", "mixed", "mixed"])

    def emit_block(self, sc: _Scope, items, depth: int, kind: str) -> bool:
        if depth <= 1:
            return False
        ck = self.child_kind(kind)
        give = self.cfg.mode == "a" or ck == "lin"
        ch = self.child(sc, give and self.cfg.mode != "nl")
        e, nl_res, lin_res = self.block(ch, depth - 1, ck)
        nb = tuple((self.name("b"), r.ty) for r in nl_res)
        lb = tuple((self.name("db"), r.ty) for r in lin_res)
        items.append(("let", nb, lb, e))
        for (n, _), r in zip(nb, nl_res):
            sc.bind_nl(n, _Var(r.ty, r.bound))
        for (n, _), r in zip(lb, lin_res):
            sc.lin[n] = _Var(r.ty, r.bound)
        return True

    def emit_drop(self, sc: _Scope, items, depth: int, kind: str) -> bool:
        mode = self.cfg.mode
        if depth > 2 and self.rng.random() < 0.4:
            ck = self.child_kind(kind)
            give = mode == "a" or ck == "lin"
            ch = self.child(sc, give and mode != "nl")
            e, _, _ = self.block(ch, depth - 1, ck)
            items.append(("let", (), (), Drop(e)))
            return True
        if sc.lin and mode != "nl" and (kind != "nl" or mode == "a"):
            v = self.rng.choice(list(sc.lin))
            del sc.lin[v]
            items.append(("let", (), (), Drop(LinVar(v))))
            return True
        vis = sc.visible()
        if vis:
            v = self.rng.choice(list(vis))
            sc.use(v)
            items.append(("let", (), (), Drop(NlVar(v))))
            return True
        return False

    def emit_call(self, sc: _Scope, items, kind: str) -> bool:
        if not self.helpers:
            return False
        mode = self.cfg.mode
        d, nl_b, lin_k = self.rng.choice(self.helpers)
        if mode == "b" and kind == "nl" and not d.is_nonlinear:
            return False
        vis = sc.visible()
        nl_args = []
        for _, t in d.nl_params:
            ok = [v for v in vis if vis[v].ty == t and vis[v].bound <= 1.0]
            if not ok:
                return False
            nl_args.append(self.rng.choice(ok))
        lin_args: list[str] = []
        for _, t in d.lin_params:
            ok = [v for v in sc.lin if sc.lin[v].ty == t and v not in lin_args]
            if not ok:
                return False
            lin_args.append(self.rng.choice(ok))
        in_b = max([sc.lin[v].bound for v in lin_args], default=0.0)
        lin_bounds = [k * in_b for k in lin_k]
        if any(b > LIN_CAP for b in lin_bounds):
            return False
        for v in nl_args:
            sc.use(v)
        for v in lin_args:
            del sc.lin[v]
        nb = tuple((self.name("r"), t) for t in d.nl_ret)
        lb = tuple((self.name("dr"), t) for t in d.lin_ret)
        items.append(("let", nb, lb, Call(d.name, tuple(nl_args), tuple(lin_args))))
        for (n, t), b in zip(nb, nl_b):
            sc.bind_nl(n, _Var(t, b))
        for (n, t), b in zip(lb, lin_bounds):
            sc.lin[n] = _Var(t, b)
        return True

    # -- definitions ----------------------------------------------------------------

    def definition(self, name: str, mode: str, depth: int, top: bool) -> tuple[FuncDef, list[float], list[float]]:
        cfg, rng = self.cfg, self.rng
        sc = _Scope()
        n_nl = rng.randint(1, cfg.max_arity)
        n_lin = 0 if cfg.closed and top else rng.randint(1, cfg.max_arity)
        if mode == "nl":
            n_lin = 0
        if mode == "b" and depth == 1:
            n_nl = 0
        if cfg.scalar_output and top and depth == 1:
            n_nl = 1
        nlp = []
        for i in range(n_nl):
            t = REAL if (i == 0 and (cfg.scalar_output or mode == "nl")) else self.rand_ty()
            nlp.append((self.name("x"), t))
        linp = [(self.name("dx"), self.rand_ty()) for _ in range(n_lin)]
        for n, t in nlp:
            sc.bind_nl(n, _Var(t, 1.0))
        for n, t in linp:
            sc.lin[n] = _Var(t, 1.0)
        kind = {"a": "mixed", "b": "lin", "nl": "nl"}[mode]
        body, nl_res, lin_res = self.block(sc, depth, kind, top=True)
        d = FuncDef(
            name, tuple(nlp), tuple(linp), tuple(r.ty for r in nl_res), tuple(r.ty for r in lin_res), body
        )
        return d, [r.bound for r in nl_res], [r.bound for r in lin_res]

    def program(self) -> Program:
        cfg = self.cfg
        defs: list[FuncDef] = []
        hdepth = max(1, cfg.max_depth - 1)
        for i in range(cfg.n_helpers if cfg.max_depth > 1 else 0):
            if cfg.mode == "b":
                hmode = "b" if self.rng.random() < cfg.linear_fraction else "nl"
            else:
                hmode = cfg.mode
            saved = (cfg.scalar_output, cfg.closed)
            cfg.scalar_output, cfg.closed = False, False
            try:
                h = self.definition(f"h{i}", hmode, hdepth, top=False)
            finally:
                cfg.scalar_output, cfg.closed = saved
            self.helpers.append(h)
            defs.append(h[0])
        main, _, _ = self.definition("f", cfg.mode, cfg.max_depth, top=True)
        defs.append(main)
        return Program(tuple(defs))


def generate_program(cfg: GenConfig) -> Program:
    """A random well-typed program whose last definition is ``f``."""
    p = _Gen(cfg).program()
    typecheck_program(p)  # a failure here is a generator bug
    return p


# -- values ----------------------------------------------------------------------


def random_value(t: Ty, rng: random.Random, lo: float = -1.0, hi: float = 1.0) -> Value:
    if isinstance(t, Real):
        return rng.uniform(lo, hi)
    return tuple(random_value(s, rng, lo, hi) for s in t.elems)


def random_args(d: FuncDef, rng: random.Random) -> tuple[list[Value], list[Value]]:
    return [random_value(t, rng) for _, t in d.nl_params], [random_value(t, rng) for _, t in d.lin_params]


def flatten(vals: Sequence[Value]) -> np.ndarray:
    out: list[float] = []
    for v in vals:
        out.extend(leaves(v))
    return np.asarray(out, dtype=float)


def unflatten(flat: Sequence[float], tys: Sequence[Ty]) -> list[Value]:
    it = iter(flat)

    def build(t: Ty) -> Value:
        if isinstance(t, Real):
            return float(next(it))
        return tuple(build(s) for s in t.elems)

    return [build(t) for t in tys]


def dot(a: Sequence[Value], b: Sequence[Value]) -> float:
    """Sum of products of corresponding scalar leaves."""
    return float(np.dot(flatten(a), flatten(b)))


def dot_scale(a: Sequence[Value], b: Sequence[Value]) -> float:
    """Sum of absolute products; the natural magnitude of ``dot(a, b)``."""
    return float(np.abs(flatten(a) * flatten(b)).sum())


# -- finite differences and duality ---------------------------------------------------


def finite_diff_jacobian(p: Program, f: str, point: Sequence, step: float = 1e-6) -> np.ndarray:
    """Central differences, one column per scalar input leaf.

    Rows are the scalar leaves of the non-linear results.
    """
    d = p.lookup(f)
    tys = [t for _, t in d.nl_params]
    x0 = flatten([as_value(v) for v in point])
    cols = []
    for i in range(len(x0)):
        h = step * max(1.0, abs(x0[i]))
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        yp = flatten(evaluate(p, f, unflatten(xp, tys))[0])
        ym = flatten(evaluate(p, f, unflatten(xm, tys))[0])
        cols.append((yp - ym) / (xp[i] - xm[i]))
    n_out = sum(scalar_count(t) for t in d.nl_ret)
    if not cols:
        return np.zeros((n_out, 0))
    return np.stack(cols, axis=1)


def duality_residual(p: Program, f: str, nl_vals, x_dot, x_ddot, ft: str | None = None) -> float:
    """|<x_dot, fT(x; x_ddot)> - <x_ddot, f(x; x_dot)>|."""
    ft = ft or f + ".T"
    _, fwd, _ = evaluate(p, f, nl_vals, x_dot)
    _, bwd, _ = evaluate(p, ft, nl_vals, x_ddot)
    return abs(dot(x_dot, bwd) - dot(x_ddot, fwd))


def close(a: float, b: float, rtol: float = 1e-9, atol: float = 1e-12, scale: float = 0.0) -> bool:
    return abs(a - b) <= max(atol, rtol * max(abs(a), abs(b), scale))


def values_close(xs, ys, rtol: float = 1e-9, atol: float = 1e-12, scales=None) -> bool:
    a, b = flatten(xs), flatten(ys)
    if a.shape != b.shape:
        return False
    s = np.zeros_like(a) if scales is None else flatten(scales)
    return bool(np.all(np.abs(a - b) <= np.maximum(atol, rtol * np.maximum(np.maximum(np.abs(a), np.abs(b)), s))))


def linear_scalars(vals: Sequence[Value]) -> int:
    return sum(value_scalars(v) for v in vals)


# -- property harnesses ---------------------------------------------------------------
#
# Each harness returns a list of human-readable failures; empty means the
# property held for the sampled inputs.


def check_conditional_linearity(p: Program, f: str, rng: random.Random, trials: int = 3) -> list[str]:
    d = p.lookup(f)
    out: list[str] = []
    works = set()
    for _ in range(trials):
        x, a = random_args(d, rng)
        _, b = random_args(d, rng)
        c = rng.uniform(-2.0, 2.0)
        nl_a, la, wa = evaluate(p, f, x, a)
        nl_b, lb, wb = evaluate(p, f, x, b)
        works |= {wa, wb}
        if nl_a != nl_b:
            out.append("non-linear results changed with the linear inputs")
        ab = [_add(u, v) for u, v in zip(a, b)]
        _, lab, wab = evaluate(p, f, x, ab)
        works.add(wab)
        sums = [_add(u, v) for u, v in zip(la, lb)]
        scale = [_add(_abs(u), _abs(v)) for u, v in zip(la, lb)]
        if not values_close(lab, sums, scales=scale):
            out.append(f"additivity: {lab} vs {sums}")
        ca = [_scale(c, u) for u in a]
        _, lca, wca = evaluate(p, f, x, ca)
        works.add(wca)
        if not values_close(lca, [_scale(c, u) for u in la]):
            out.append(f"homogeneity: {lca} vs c*{la}")
    if len(works) != 1:
        out.append(f"work depends on input values: {sorted(works)}")
    return out


def _add(a: Value, b: Value) -> Value:
    if isinstance(a, tuple):
        return tuple(_add(x, y) for x, y in zip(a, b))
    return a + b


def _abs(a: Value) -> Value:
    if isinstance(a, tuple):
        return tuple(_abs(x) for x in a)
    return abs(a)


def _scale(c: float, a: Value) -> Value:
    if isinstance(a, tuple):
        return tuple(_scale(c, x) for x in a)
    return c * a


def check_closed_zero(p: Program, f: str, rng: random.Random) -> list[str]:
    d = p.lookup(f)
    x, lin = random_args(d, rng)
    _, ys, _ = evaluate(p, f, x, lin)
    bad = [v for v in flatten(ys) if v != 0.0]
    return [f"closed term returned non-zero linear results {bad}"] if bad else []


def check_dead_code(p: Program, f: str, rng: random.Random) -> list[str]:
    """Every evaluated sub-expression does at least (linear scalars in) minus
    (linear scalars out) work."""
    from .ir import free_lin

    d = p.lookup(f)
    x, lin = random_args(d, rng)
    fl: dict[int, frozenset] = {}
    out: list[str] = []

    def hook(e, env, nl_res, lin_res, work):
        key = id(e)
        if key not in fl:
            fl[key] = free_lin(e)
        l_in = sum(value_scalars(env[v]) for v in fl[key])
        l_out = linear_scalars(lin_res)
        if work < l_in - l_out:
            out.append(f"work {work} < {l_in} - {l_out} for {type(e).__name__}")

    evaluate(p, f, x, lin, hook=hook)
    return out


def transpose_checks(p: Program, f: str, rng: random.Random, trials: int = 2) -> dict[str, list]:
    """Duality residuals, work-ledger failures and double-transpose failures."""
    from .transpose import transpose

    q = transpose(p, [f])
    q = transpose(q, [f + ".T"])
    d = p.lookup(f)
    res: dict[str, list] = {"duality": [], "ledger": [], "double": []}
    for _ in range(trials):
        x, xd = random_args(d, rng)
        xdd = [random_value(t, rng) for t in d.lin_ret]
        _, fwd, w = evaluate(q, f, x, xd)
        _, bwd, wt = evaluate(q, f + ".T", x, xdd)
        lhs, rhs = dot(xd, bwd), dot(xdd, fwd)
        res["duality"].append((lhs, rhs))
        l_in, l_out = linear_scalars(xd), linear_scalars(fwd)
        if wt + l_in > w + l_out:
            res["ledger"].append(f"W(fT)={wt} + {l_in} > W(f)={w} + {l_out}")
        _, fwd2, w2 = evaluate(q, f + ".T.T", x, xd)
        if not values_close(fwd2, fwd, rtol=1e-12):
            res["double"].append(f"fTT gave {fwd2}, f gave {fwd}")
        if w2 > w:
            res["double"].append(f"W(fTT)={w2} > W(f)={w}")
    return res


def check_unzip(p: Program, f: str, rng: random.Random, checkpoint: bool = False) -> list[str]:
    """Reconstruction equals the original: identical values, and identical
    work (or at least as much work when checkpointing)."""
    from .ir import NameSupply
    from .unzip import reconstruct, unzip, unzip_def

    supply = NameSupply.for_program(p)
    q = unzip(p, [f], checkpoint=checkpoint, supply=supply)
    u, _, _ = unzip_def(p.lookup(f), q.table(), supply, checkpoint)
    r = reconstruct(u, p.lookup(f), supply)
    q = q.extend([r])
    typecheck_program(q)
    d = p.lookup(f)
    x, lin = random_args(d, rng)
    a_nl, a_lin, wa = evaluate(p, f, x, lin)
    b_nl, b_lin, wb = evaluate(q, r.name, x, lin)
    out = []
    if (a_nl, a_lin) != (b_nl, b_lin):
        out.append(f"reconstruction values differ: {(a_nl, a_lin)} vs {(b_nl, b_lin)}")
    if checkpoint and wb < wa:
        out.append(f"checkpointed work {wb} below baseline {wa}")
    if not checkpoint and wb != wa:
        out.append(f"reconstruction work {wb} != original {wa}")
    return out


def jvp_fd_error(p: Program, f: str, rng: random.Random, step: float = 1e-6) -> tuple[float, float]:
    """(max violation ratio, work ratio) for one random point and direction.

    The violation ratio is |jvp - fd| / (1e-5 * max(1, |jvp|, |fd|)); the
    check passes when it is at most 1.
    """
    from .jvp import jvp

    d = p.lookup(f)
    q = jvp(p, [f])
    x, _ = random_args(d, rng)
    v = [random_value(t, rng) for _, t in d.nl_params]
    prim, tan, wj = evaluate(q, f + ".jvp", x, v)
    base, _, w = evaluate(p, f, x)
    if prim != base:
        return math.inf, wj / max(w, 1)
    J = finite_diff_jacobian(p, f, x, step)
    fd = J @ flatten(v) if J.size else np.zeros(len(flatten(tan)))
    a = flatten(tan)
    if a.size == 0:
        return 0.0, wj / max(w, 1)
    viol = np.abs(a - fd) / (1e-5 * np.maximum(1.0, np.maximum(np.abs(a), np.abs(fd))))
    return float(viol.max()), wj / max(w, 1)


def forward_jacobian(p: Program, f: str, point: Sequence) -> np.ndarray:
    """Jacobian of a non-linear ``f`` built column by column from ``f.jvp``
    with basis tangents."""
    from .jvp import jvp

    d = p.lookup(f)
    q = p if f + ".jvp" in p else jvp(p, [f])
    tys = [t for _, t in d.nl_params]
    x = [as_value(v) for v in point]
    n_in = len(flatten(x))
    cols = []
    for i in range(n_in):
        e = np.zeros(n_in)
        e[i] = 1.0
        _, tan, _ = evaluate(q, f + ".jvp", x, unflatten(e, tys))
        cols.append(flatten(tan))
    n_out = sum(scalar_count(t) for t in d.nl_ret)
    if not cols:
        return np.zeros((n_out, 0))
    return np.stack(cols, axis=1)


def size_ratios(p: Program, f: str) -> dict[str, float]:
    """|X(P)| / |P| for each pass X that applies, where P is ``f`` together
    with everything it calls and X(P) is the whole output program.

    ``jvp`` needs a purely non-linear ``f``; ``transpose`` needs a linear
    Linear B ``f``; ``unzip`` takes anything.
    """
    from .ir import program_size, reachable
    from .jvp import JvpError, jvp
    from .transpose import TransposeError, transpose
    from .unzip import unzip

    src = Program(tuple(reachable(p, [f])))
    base = program_size(src)
    out: dict[str, float] = {"unzip": program_size(unzip(src, [f])) / base}
    try:
        out["jvp"] = program_size(jvp(src, [f])) / base
    except JvpError:
        pass
    try:
        out["transpose"] = program_size(transpose(src, [f])) / base
    except TransposeError:
        pass
    return out
