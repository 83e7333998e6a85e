"""Command-line front end.

    lineara check FILE
    lineara eval FILE --func F [--args "..."] [--lin-args "..."] [--cost]
    lineara jvp FILE --func F
    lineara unzip FILE --func F [--checkpoint]
    lineara transpose FILE --func F
    lineara grad FILE --func F --at "..."
    lineara gen --seed N [--linear | --mode a|b|nl]

FILE may be ``-`` for standard input, so transforms can be chained through
pipes.  Programs and values go to stdout; diagnostics go to stderr as
``file:line:col: message``.

Exit codes: 0 success, 2 type or Linear B error, 3 parse error, 4 usage
error (bad flags, unknown function, malformed values, evaluation failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .interp import EvalError, evaluate, format_value, parse_values
from .ir import Program
from .jvp import JvpError, jvp
from .oracle import GenConfig, generate_program
from .parser import ParseError, offset_to_line_col, parse_program, read_sexprs
from .pipeline import PipelineError, gradient
from .printer import pretty_print, to_tree
from .transpose import TransposeError, transpose
from .typecheck import LinearTypeError, is_linear_b, typecheck_program
from .unzip import UnzipError, unzip

EXIT_OK = 0
EXIT_TYPE = 2
EXIT_PARSE = 3
EXIT_USAGE = 4


class _Usage(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which would collide with type errors
    def error(self, message):
        raise _Usage(message)


@dataclass
class CliConfig:
    subcommand: str
    path: str | None = None
    func: str | None = None
    args: str = ""
    lin_args: str = ""
    at: str = ""
    emit: str = "text"
    checkpoint: bool = False
    cost: bool = False
    seed: int = 0
    mode: str = "a"
    depth: int = 3


def _build_parser() -> argparse.ArgumentParser:
    ap = _ArgParser(prog="lineara", description="Linear IR checker, interpreter and AD transforms")
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_ArgParser)

    def with_file(name, help, func=True):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("path", metavar="FILE", help="program file, or - for stdin")
        if func:
            sp.add_argument("--func", required=True, help="function to operate on")
        return sp

    with_file("check", "typecheck and report Linear B membership", func=False)
    ev = with_file("eval", "evaluate a function")
    ev.add_argument("--args", default="", help='non-linear arguments, e.g. "3 (1 2)"')
    ev.add_argument("--lin-args", default="", help="linear arguments, same syntax")
    ev.add_argument("--cost", action="store_true", help="also print the work performed")
    for name, help in (("jvp", "add the forward derivative"), ("transpose", "add the transpose")):
        sp = with_file(name, help)
        sp.add_argument("--emit", choices=("text", "structured"), default="text")
    uz = with_file("unzip", "split into non-linear and linear halves")
    uz.add_argument("--checkpoint", action="store_true", help="recompute instead of taping")
    uz.add_argument("--emit", choices=("text", "structured"), default="text")
    gr = with_file("grad", "reverse-mode gradient of a scalar function")
    gr.add_argument("--at", required=True, help="point at which to differentiate")
    gen = sub.add_parser("gen", help="print a random well-typed program")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--linear", action="store_true", help="Linear B linear definitions (same as --mode b)")
    gen.add_argument("--mode", choices=("a", "b", "nl"), default="a")
    gen.add_argument("--depth", type=int, default=3)
    gen.add_argument("--emit", choices=("text", "structured"), default="text")
    return ap


def _config(ns: argparse.Namespace) -> CliConfig:
    cfg = CliConfig(ns.subcommand)
    for k in ("path", "func", "args", "lin_args", "at", "emit", "checkpoint", "cost", "seed", "mode", "depth"):
        if hasattr(ns, k):
            setattr(cfg, k, getattr(ns, k))
    if getattr(ns, "linear", False):
        cfg.mode = "b"
    return cfg


class _Session:
    def __init__(self, cfg: CliConfig, out, err):
        self.cfg = cfg
        self.out = out
        self.err = err
        self.text = ""

    def diag(self, msg: str, offset: int | None = None) -> None:
        where = self.cfg.path or "<gen>"
        if offset is not None:
            line, col = offset_to_line_col(self.text, offset)
            where += f":{line}:{col}"
        print(f"{where}: {msg}", file=self.err)

    def load(self) -> Program:
        path = self.cfg.path
        if path == "-":
            self.text = sys.stdin.read()
        else:
            try:
                with open(path, encoding="utf-8") as fh:
                    self.text = fh.read()
            except OSError as exc:
                raise _Usage(f"cannot read {path}: {exc.strerror}") from None
        return parse_program(self.text)

    def def_offset(self, name: str | None) -> int | None:
        """Source offset of ``(def name ...)``, for locating type errors."""
        if name is None:
            return None
        try:
            for x in read_sexprs(self.text):
                items = getattr(x, "items", ())
                if len(items) > 1 and getattr(items[1], "text", None) == name:
                    return x.span.start
        except ParseError:
            pass
        return None

    def need_func(self, p: Program) -> str:
        f = self.cfg.func
        if f not in p:
            raise _Usage(f"unknown function {f!r}")
        return f

    def emit(self, p: Program) -> None:
        if self.cfg.emit == "structured":
            self.out.write(json.dumps(to_tree(p)) + "\n")
        else:
            self.out.write(pretty_print(p))

    # -- subcommands -------------------------------------------------------------

    def check(self) -> int:
        p = self.load()
        sigs = typecheck_program(p)
        reports = is_linear_b(p)
        for d in p.defs:
            s = sigs[d.name]
            r = reports[d.name]
            kind = "linear-b" if r.ok else f"linear-a only ({r.violation})"
            print(f"{d.name}: ok {s}  [{kind}]", file=self.out)
        return EXIT_OK

    def eval(self) -> int:
        p = self.load()
        typecheck_program(p)
        f = self.need_func(p)
        try:
            xs, ls = parse_values(self.cfg.args), parse_values(self.cfg.lin_args)
        except ValueError as exc:
            raise _Usage(str(exc)) from None
        nl, lin, work = evaluate(p, f, xs, ls)
        for v in nl + lin:
            print(format_value(v), file=self.out)
        if self.cfg.cost:
            print(f"work: {work}", file=self.out)
        return EXIT_OK

    def jvp(self) -> int:
        p = self.load()
        typecheck_program(p)
        self.emit(jvp(p, [self.need_func(p)]))
        return EXIT_OK

    def unzip(self) -> int:
        p = self.load()
        typecheck_program(p)
        self.emit(unzip(p, [self.need_func(p)], checkpoint=self.cfg.checkpoint))
        return EXIT_OK

    def transpose(self) -> int:
        p = self.load()
        typecheck_program(p)
        self.emit(transpose(p, [self.need_func(p)]))
        return EXIT_OK

    def grad(self) -> int:
        p = self.load()
        typecheck_program(p)
        f = self.need_func(p)
        try:
            xs = parse_values(self.cfg.at)
        except ValueError as exc:
            raise _Usage(str(exc)) from None
        for v in gradient(p, f, xs):
            print(format_value(v), file=self.out)
        return EXIT_OK

    def gen(self) -> int:
        cfg = GenConfig(seed=self.cfg.seed, max_depth=self.cfg.depth, mode=self.cfg.mode)
        self.emit(generate_program(cfg))
        return EXIT_OK


def run(argv=None, out=None, err=None) -> int:
    """Run one command; returns the exit code instead of exiting."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        ns = _build_parser().parse_args(argv)
    except _Usage as exc:
        print(f"lineara: {exc}", file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    s = _Session(_config(ns), out, err)
    try:
        return getattr(s, s.cfg.subcommand)()
    except ParseError as exc:
        s.diag(f"parse error: {exc.message}", exc.span.start)
        return EXIT_PARSE
    except LinearTypeError as exc:
        s.diag(f"type error: {exc}", s.def_offset(exc.func))
        return EXIT_TYPE
    except TransposeError as exc:
        # definitions outside Linear B, or with non-linear results
        s.diag(f"linear b error: {exc}", s.def_offset(s.cfg.func))
        return EXIT_TYPE
    except (_Usage, EvalError, JvpError, UnzipError, PipelineError, ValueError) as exc:
        s.diag(str(exc))
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
