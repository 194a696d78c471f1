"""An implementation of manifest contracts with fussy cast semantics:
parser, evaluator, typechecker, subtyping prover, cast optimizer and a
differential testing harness."""

from .optimizer import optimize, selfify
from .parser import parse_file, parse_term, parse_type
from .semantics import evaluate, trace
from .subtyping import subtype
from .typesystem import FhTypeError, typecheck

__all__ = [
    "FhTypeError",
    "evaluate",
    "optimize",
    "parse_file",
    "parse_term",
    "parse_type",
    "selfify",
    "subtype",
    "trace",
    "typecheck",
]
__version__ = "0.1.0"
