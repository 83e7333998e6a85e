"""Parser for the parenthesized surface syntax of Linear A.

Grammar (whitespace-insensitive, ``;;`` starts a line comment)::

    program := def*
    def     := (def NAME (param* ; param*) (ty* ; ty*) expr)
    param   := (NAME ty)
    ty      := R | (tup ty*)
    expr    := (ret (NAME* ; NAME*))
             | (let (param* ; param*) expr expr)
             | (untup (param* ;) NAME expr) | (untup (; param*) NAME expr)
             | (call NAME (NAME* ; NAME*))
             | NAME | NUMBER | (tup NAME*) | (ltup NAME*)
             | (sin NAME) | (cos NAME) | (exp NAME) | (add NAME NAME) | (mul NAME NAME)
             | (lzero ty) | (ladd NAME NAME) | (lscale NAME NAME)
             | (dup NAME) | (drop expr)

A bare NAME is a non-linear or linear variable depending on which side of
the semicolon introduced it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

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
    Ret,
    Tup,
    Ty,
    UnpackLin,
    UnpackNl,
)

KEYWORDS = frozenset(
    {"def", "ret", "let", "untup", "call", "tup", "ltup", "lzero", "ladd", "lscale", "dup", "drop", "R"}
    | set(PRIM_ARITY)
)

NAME_RE = re.compile(r"%?[A-Za-z_][A-Za-z0-9_.']*\Z")
NUMBER_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")
_TOKEN_RE = re.compile(r"\s+|;;[^\n]*|[();]|[^\s();]+")


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{message} (at offset {span.start})")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class Atom:
    text: str
    span: SourceSpan


@dataclass(frozen=True)
class SList:
    items: tuple
    span: SourceSpan


SEMI = ";"


def read_sexprs(text: str) -> list:
    """Tokenize and group into atoms/lists.  ``;`` is kept as an atom."""
    stack: list[tuple[int, list]] = [(0, [])]
    pos = 0
    for m in _TOKEN_RE.finditer(text):
        if m.start() != pos:
            raise ParseError("unexpected character", SourceSpan(pos, m.start()))
        pos = m.end()
        tok = m.group()
        if tok[0].isspace() or tok.startswith(";;"):
            continue
        if tok == "(":
            stack.append((m.start(), []))
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", SourceSpan(m.start(), m.end()))
            start, items = stack.pop()
            stack[-1][1].append(SList(tuple(items), SourceSpan(start, m.end())))
        else:
            stack[-1][1].append(Atom(tok, SourceSpan(m.start(), m.end())))
    if pos != len(text):
        raise ParseError("unexpected character", SourceSpan(pos, len(text)))
    if len(stack) != 1:
        start = stack[-1][0]
        raise ParseError("unclosed '('", SourceSpan(start, start + 1))
    return stack[0][1]


def _is_atom(x, text=None) -> bool:
    return isinstance(x, Atom) and (text is None or x.text == text)


def _split_semi(lst: SList, what: str) -> tuple[tuple, tuple]:
    semis = [i for i, x in enumerate(lst.items) if _is_atom(x, SEMI)]
    if len(semis) != 1:
        raise ParseError(f"{what} needs exactly one ';'", lst.span)
    i = semis[0]
    return lst.items[:i], lst.items[i + 1 :]


class _Parser:
    def __init__(self):
        self.funcs: dict[str, FuncDef] = {}

    # -- small pieces ---------------------------------------------------------

    def name(self, x, *, operand: bool = True) -> str:
        if isinstance(x, SList):
            if operand:
                raise ParseError("ANF violation: operand must be a variable name, not a compound expression", x.span)
            raise ParseError("expected a name", x.span)
        if NUMBER_RE.match(x.text) and operand:
            raise ParseError("ANF violation: literal operand; bind it with let first", x.span)
        if not NAME_RE.match(x.text) or x.text in KEYWORDS:
            raise ParseError(f"invalid name {x.text!r}", x.span)
        return x.text

    def ty(self, x) -> Ty:
        if _is_atom(x, "R"):
            return REAL
        if isinstance(x, SList) and x.items and _is_atom(x.items[0], "tup"):
            return Tup(tuple(self.ty(y) for y in x.items[1:]))
        raise ParseError("expected a type", x.span)

    def params(self, xs, scope, seen_here) -> tuple:
        out = []
        for x in xs:
            if not (isinstance(x, SList) and len(x.items) == 2):
                raise ParseError("expected a parameter (NAME ty)", x.span)
            n = self.name(x.items[0], operand=False)
            if n in scope:
                raise ParseError(f"shadowing: {n!r} is already bound in an enclosing scope", x.items[0].span)
            if n in seen_here:
                raise ParseError(f"duplicate binder {n!r}", x.items[0].span)
            seen_here.add(n)
            out.append((n, self.ty(x.items[1])))
        return tuple(out)

    def binder_list(self, x, scope, what):
        if not isinstance(x, SList):
            raise ParseError(f"expected {what} list", x.span)
        left, right = _split_semi(x, what)
        seen: set[str] = set()
        return self.params(left, scope, seen), self.params(right, scope, seen)

    def name_list(self, x, what):
        if not isinstance(x, SList):
            raise ParseError(f"expected {what} list", x.span)
        left, right = _split_semi(x, what)
        return tuple(self.name(y) for y in left), tuple(self.name(y) for y in right)

    # -- definitions and expressions ----------------------------------------------

    def definition(self, x) -> FuncDef:
        if not (isinstance(x, SList) and x.items and _is_atom(x.items[0], "def")):
            raise ParseError("expected (def ...)", x.span)
        if len(x.items) != 5:
            raise ParseError("def takes a name, parameters, result types and a body", x.span)
        _, name_x, params_x, rets_x, body_x = x.items
        name = self.name(name_x, operand=False)
        if name in self.funcs:
            raise ParseError(f"duplicate function name {name!r}", name_x.span)
        nlp, linp = self.binder_list(params_x, {}, "parameter")
        if not isinstance(rets_x, SList):
            raise ParseError("expected result type list", rets_x.span)
        left, right = _split_semi(rets_x, "result type")
        nlr = tuple(self.ty(t) for t in left)
        linr = tuple(self.ty(t) for t in right)
        scope = {n: "nl" for n, _ in nlp} | {n: "lin" for n, _ in linp}
        body = self.expr(body_x, scope)
        d = FuncDef(name, nlp, linp, nlr, linr, body)
        self.funcs[name] = d
        return d

    def expr(self, x, scope: dict[str, str]) -> Expr:
        if isinstance(x, Atom):
            if x.text == SEMI:
                raise ParseError("unexpected ';'", x.span)
            if NUMBER_RE.match(x.text):
                v = float(x.text)
                if not math.isfinite(v):
                    raise ParseError("literal is not a finite binary64 number", x.span)
                return Lit(v)
            n = self.name(x, operand=False)
            return LinVar(n) if scope.get(n) == "lin" else NlVar(n)
        if not x.items or not isinstance(x.items[0], Atom):
            raise ParseError("expected an expression form", x.span)
        head, args = x.items[0].text, x.items[1:]

        def need(k):
            if len(args) != k:
                raise ParseError(f"'{head}' takes {k} argument(s), got {len(args)}", x.span)

        if head == "ret":
            need(1)
            nl, lin = self.name_list(args[0], "return")
            return Ret(nl, lin)
        if head == "let":
            need(3)
            nlb, linb = self.binder_list(args[0], scope, "binder")
            bound = self.expr(args[1], scope)
            inner = dict(scope)
            inner.update({n: "nl" for n, _ in nlb})
            inner.update({n: "lin" for n, _ in linb})
            return Let(nlb, linb, bound, self.expr(args[2], inner))
        if head == "untup":
            need(3)
            nlb, linb = self.binder_list(args[0], scope, "binder")
            if nlb and linb:
                raise ParseError("untup binds either non-linear or linear components, not both", args[0].span)
            src = self.name(args[1])
            linear = bool(linb) or (not nlb and scope.get(src) == "lin")
            binds = linb if linear else nlb
            inner = dict(scope)
            inner.update({n: ("lin" if linear else "nl") for n, _ in binds})
            body = self.expr(args[2], inner)
            return UnpackLin(binds, src, body) if linear else UnpackNl(binds, src, body)
        if head == "call":
            need(2)
            callee = self.name(args[0], operand=False)
            if callee not in self.funcs:
                raise ParseError(f"call to undefined or later-defined function {callee!r}", args[0].span)
            nl, lin = self.name_list(args[1], "argument")
            return Call(callee, nl, lin)
        if head == "tup":
            return NlTuple(tuple(self.name(a) for a in args))
        if head == "ltup":
            return LinTuple(tuple(self.name(a) for a in args))
        if head in PRIM_ARITY:
            need(PRIM_ARITY[head])
            return Prim(head, tuple(self.name(a) for a in args))
        if head == "lzero":
            need(1)
            return LinZero(self.ty(args[0]))
        if head == "ladd":
            need(2)
            return LinAdd(self.name(args[0]), self.name(args[1]))
        if head == "lscale":
            need(2)
            return LinScale(self.name(args[0]), self.name(args[1]))
        if head == "dup":
            need(1)
            return Dup(self.name(args[0]))
        if head == "drop":
            need(1)
            return Drop(self.expr(args[0], scope))
        raise ParseError(f"unknown form {head!r}", x.items[0].span)


def parse_program(text: str) -> Program:
    """Parse a whole program; raises :class:`ParseError` on the first problem."""
    p = _Parser()
    defs = [p.definition(x) for x in read_sexprs(text)]
    return Program(tuple(defs))


def offset_to_line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col
