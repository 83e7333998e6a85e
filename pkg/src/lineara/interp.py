"""Call-by-value evaluator with exact integer work metering.

Values are Python floats (real scalars) and tuples of values.  Linear inputs
are ordinary values supplied from outside the language.

Work model: every non-linear primitive costs 1; ``ladd`` and ``lscale`` cost
one per scalar of their result; ``drop`` costs its inner work plus one per
real scalar of whatever the inner expression returned; calls cost their body
and lets cost bound plus body.  Everything else is free.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

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
    Lit,
    NlTuple,
    NlVar,
    Prim,
    Program,
    Real,
    Ret,
    Ty,
    UnpackLin,
    UnpackNl,
)

Value = Union[float, tuple]


class EvalError(Exception):
    pass


# -- values ---------------------------------------------------------------------


def value_scalars(v: Value) -> int:
    if isinstance(v, tuple):
        return sum(value_scalars(x) for x in v)
    return 1


def leaves(v: Value) -> list[float]:
    if isinstance(v, tuple):
        out: list[float] = []
        for x in v:
            out.extend(leaves(x))
        return out
    return [v]


def zero_of(t: Ty) -> Value:
    if isinstance(t, Real):
        return 0.0
    return tuple(zero_of(x) for x in t.elems)


def add_values(a: Value, b: Value) -> Value:
    if isinstance(a, tuple):
        return tuple(add_values(x, y) for x, y in zip(a, b))
    return a + b


def scale_value(c: float, v: Value) -> Value:
    if isinstance(v, tuple):
        return tuple(scale_value(c, x) for x in v)
    return c * v


def matches(v: Value, t: Ty) -> bool:
    if isinstance(t, Real):
        return isinstance(v, float) and math.isfinite(v)
    return isinstance(v, tuple) and len(v) == len(t.elems) and all(matches(x, s) for x, s in zip(v, t.elems))


def as_value(x) -> Value:
    """Coerce ints, floats and nested sequences into the value representation."""
    if isinstance(x, (tuple, list)):
        return tuple(as_value(y) for y in x)
    return float(x)


_VAL_TOKEN = re.compile(r"\s+|[()]|[^\s()]+")


def parse_values(text: str) -> list[Value]:
    """Parse ``"3 (1 2)"`` into ``[3.0, (1.0, 2.0)]``."""
    stack: list[list] = [[]]
    pos = 0
    for m in _VAL_TOKEN.finditer(text):
        if m.start() != pos:
            raise ValueError(f"bad value syntax at offset {pos}")
        pos = m.end()
        tok = m.group()
        if tok.isspace():
            continue
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced ')' in value list")
            inner = stack.pop()
            stack[-1].append(tuple(inner))
        else:
            try:
                stack[-1].append(float(tok))
            except ValueError:
                raise ValueError(f"not a number: {tok!r}") from None
    if len(stack) != 1:
        raise ValueError("unclosed '(' in value list")
    return stack[0]


def format_value(v: Value) -> str:
    if isinstance(v, tuple):
        return "(" + " ".join(format_value(x) for x in v) + ")"
    return "%.17g" % v


# -- evaluation -------------------------------------------------------------------

_PRIMS: dict[str, Callable] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "add": lambda a, b: a + b,
    "mul": lambda a, b: a * b,
}


@dataclass
class CostMeter:
    work: int = 0

    def charge(self, n: int) -> None:
        self.work += n


# hook(expr, env, nl_results, lin_results, work_of_expr)
EvalHook = Callable[[Expr, Mapping[str, Value], tuple, tuple, int], None]


class _Evaluator:
    def __init__(self, p: Program, hook: EvalHook | None = None):
        self.table = p.table()
        self.meter = CostMeter()
        self.hook = hook

    def eval(self, e: Expr, env: dict[str, Value]) -> tuple[tuple, tuple]:
        """Returns (non-linear results, linear results)."""
        before = self.meter.work
        res = self._eval(e, env)
        if self.hook is not None:
            self.hook(e, env, res[0], res[1], self.meter.work - before)
        return res

    def _eval(self, e: Expr, env: dict[str, Value]):
        if isinstance(e, Ret):
            return tuple(env[v] for v in e.nl), tuple(env[v] for v in e.lin)
        if isinstance(e, Let):
            nl_vals, lin_vals = self.eval(e.bound, env)
            env2 = dict(env)
            for (n, _), v in zip(e.nl_binds, nl_vals):
                env2[n] = v
            for (n, _), v in zip(e.lin_binds, lin_vals):
                env2[n] = v
            return self.eval(e.body, env2)
        if isinstance(e, (UnpackNl, UnpackLin)):
            src = env[e.source]
            env2 = dict(env)
            for (n, _), v in zip(e.binds, src):
                env2[n] = v
            return self.eval(e.body, env2)
        if isinstance(e, Call):
            d = self.table.get(e.callee)
            if d is None:
                raise EvalError(f"unknown function {e.callee!r}")
            return self.call(d, [env[v] for v in e.nl_args], [env[v] for v in e.lin_args])
        if isinstance(e, NlVar):
            return (env[e.v],), ()
        if isinstance(e, Lit):
            return (float(e.value),), ()
        if isinstance(e, NlTuple):
            return (tuple(env[v] for v in e.vars),), ()
        if isinstance(e, Prim):
            self.meter.charge(1)
            try:
                return (float(_PRIMS[e.op](*(env[v] for v in e.args))),), ()
            except OverflowError:
                raise EvalError(f"{e.op} overflowed") from None
        if isinstance(e, LinVar):
            return (), (env[e.v],)
        if isinstance(e, LinZero):
            return (), (zero_of(e.ty),)
        if isinstance(e, LinTuple):
            return (), (tuple(env[v] for v in e.vars),)
        if isinstance(e, LinAdd):
            r = add_values(env[e.a], env[e.b])
            self.meter.charge(value_scalars(r))
            return (), (r,)
        if isinstance(e, LinScale):
            r = scale_value(env[e.coeff], env[e.arg])
            self.meter.charge(value_scalars(r))
            return (), (r,)
        if isinstance(e, Dup):
            v = env[e.v]
            return (), (v, v)
        if isinstance(e, Drop):
            nl_vals, lin_vals = self.eval(e.inner, env)
            self.meter.charge(sum(value_scalars(v) for v in nl_vals + lin_vals))
            return (), ()
        raise EvalError(f"cannot evaluate {e!r}")

    def call(self, d: FuncDef, nl_args, lin_args):
        env = {n: v for (n, _), v in zip(d.nl_params, nl_args)}
        env.update({n: v for (n, _), v in zip(d.lin_params, lin_args)})
        return self.eval(d.body, env)


def _check_args(d: FuncDef, nl_args, lin_args) -> tuple[list, list]:
    if len(nl_args) != len(d.nl_params) or len(lin_args) != len(d.lin_params):
        raise EvalError(
            f"{d.name} expects ({len(d.nl_params)}; {len(d.lin_params)}) arguments, "
            f"got ({len(nl_args)}; {len(lin_args)})"
        )
    nl_args = [as_value(v) for v in nl_args]
    lin_args = [as_value(v) for v in lin_args]
    for (n, t), v in zip(d.nl_params + d.lin_params, nl_args + lin_args):
        if not matches(v, t):
            raise EvalError(f"argument for {n!r} does not match type {t}: {format_value(v)}")
    return nl_args, lin_args


def evaluate(
    p: Program,
    f: str,
    nl_args: Sequence = (),
    lin_args: Sequence = (),
    hook: EvalHook | None = None,
) -> tuple[tuple, tuple, int]:
    """Run ``f`` on the given arguments; returns (nl results, lin results, work).

    ``hook`` (if given) sees every evaluated sub-expression together with its
    environment, its results and the work it performed.
    """
    try:
        d = p.lookup(f)
    except KeyError:
        raise EvalError(f"unknown function {f!r}") from None
    nl_args, lin_args = _check_args(d, nl_args, lin_args)
    ev = _Evaluator(p, hook)
    nl, lin = ev.call(d, nl_args, lin_args)
    return nl, lin, ev.meter.work
