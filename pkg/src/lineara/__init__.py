"""A linear intermediate language for automatic differentiation.

Programs are parsed from ``.lina`` text, checked by a linear type system and
evaluated by a work-metering interpreter.  Three program transformations
build reverse mode out of forward mode: :func:`jvp` (forward
differentiation), :func:`unzip` (split non-linear work from linear work) and
:func:`transpose` (run a linear definition backwards).
"""

from .interp import EvalError, evaluate, format_value, parse_values
from .ir import FuncDef, NameSupply, Program, Real, Tup, program_size
from .jvp import JvpError, jvp
from .parser import ParseError, parse_program
from .pipeline import PipelineError, delinearize, gradient, gradient_def, reverse_derivative, vjp
from .printer import from_tree, pretty_print, to_tree
from .transpose import TransposeError, transpose
from .typecheck import LinearTypeError, is_linear_b, typecheck_program
from .unzip import UnzipError, reconstruct, unzip

__version__ = "0.1.0"

__all__ = [
    "EvalError",
    "FuncDef",
    "JvpError",
    "LinearTypeError",
    "NameSupply",
    "ParseError",
    "PipelineError",
    "Program",
    "Real",
    "TransposeError",
    "Tup",
    "UnzipError",
    "delinearize",
    "evaluate",
    "format_value",
    "from_tree",
    "gradient",
    "gradient_def",
    "is_linear_b",
    "jvp",
    "parse_program",
    "parse_values",
    "pretty_print",
    "program_size",
    "reconstruct",
    "reverse_derivative",
    "to_tree",
    "transpose",
    "typecheck_program",
    "unzip",
    "vjp",
]
