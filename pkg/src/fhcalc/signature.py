"""Types and denotations of constants and primitive operations.

A primitive operation has a monomorphic dependent type
``(x1:T1) -> ... -> (xn:Tn) -> T0`` where every ``Ti`` is a possibly refined
base type. Its denotation is a Python callable over Python ``bool``/``int``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .syntax import BOOL, INT, Base, Const, Fun, Op, Refine, Type, Var, unref


@dataclass(frozen=True)
class OpSig:
    name: str
    params: tuple  # ((var, Type), ...)
    result: Type
    impl: Callable = field(compare=False)
    selector: str = ""  # how the denotation was declared, for printing

    @property
    def arity(self) -> int:
        return len(self.params)

    def as_type(self) -> Type:
        ty = self.result
        for var, pty in reversed(self.params):
            ty = Fun(var, pty, ty)
        return ty


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# Named denotations that signature files may select with ``by NAME``.
BUILTINS: dict[str, Callable] = {
    "not": lambda a: not a,
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
    "eqBool": lambda a, b: a == b,
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "eqInt": lambda a, b: a == b,
    "neq": lambda a, b: a != b,
    "lt": lambda a, b: a < b,
    "le": lambda a, b: a <= b,
    "gt": lambda a, b: a > b,
    "ge": lambda a, b: a >= b,
    "prime?": is_prime,
    "is_zero": lambda n: n == 0,
    "zero": lambda: 0,
    # depth-counter stack: pushing onto any counter yields a positive depth
    "depth_push": lambda v, n: max(n, 0) + 1,
    "depth_pop": lambda n: n - 1,
}

# Equality operator used for each base type (selfification needs one per base).
EQUALITY = {"Int": "eqInt", "Bool": "eqBool"}

INFIX = {
    "add": "+",
    "sub": "-",
    "mul": "*",
    "eqInt": "==",
    "neq": "!=",
    "lt": "<",
    "le": "<=",
    "gt": ">",
    "ge": ">=",
    "and": "&&",
    "or": "||",
}


class Signature:
    """Read-only table of operation signatures, extended functionally."""

    def __init__(self, ops: dict[str, OpSig] | None = None):
        self.ops: dict[str, OpSig] = dict(ops or {})

    def __contains__(self, name: str) -> bool:
        return name in self.ops

    def __getitem__(self, name: str) -> OpSig:
        return self.ops[name]

    def extend(self, *sigs: OpSig) -> "Signature":
        ops = dict(self.ops)
        for s in sigs:
            ops[s.name] = s
        return Signature(ops)

    def names(self) -> list[str]:
        return list(self.ops)

    @staticmethod
    def const_type(k: Const) -> Type:
        return Base(k.base)


def _sig(name: str, params: list[tuple[str, Type]], result: Type, impl: str | None = None) -> OpSig:
    impl = impl or name
    return OpSig(name, tuple(params), result, BUILTINS[impl], impl)


def default_signature() -> Signature:
    b2 = [("a", BOOL), ("b", BOOL)]
    i2 = [("a", INT), ("b", INT)]
    sigs = [
        _sig("not", [("a", BOOL)], BOOL),
        _sig("and", b2, BOOL),
        _sig("or", b2, BOOL),
        _sig("eqBool", b2, BOOL),
        _sig("add", i2, INT),
        _sig("sub", i2, INT),
        _sig("mul", i2, INT),
        _sig("eqInt", i2, BOOL),
        _sig("neq", i2, BOOL),
        _sig("lt", i2, BOOL),
        _sig("le", i2, BOOL),
        _sig("gt", i2, BOOL),
        _sig("ge", i2, BOOL),
        _sig("prime?", [("a", INT)], BOOL),
    ]
    return Signature({s.name: s for s in sigs})


DEFAULT = default_signature()


def stack_signature(base: Signature = DEFAULT) -> Signature:
    """Integer stacks encoded by their depth: ``is_empty n`` is ``n == 0``."""
    nonempty = Refine("x", INT, Op("not", (Op("is_empty", (Var("x"),)),)))
    return base.extend(
        _sig("is_empty", [("n", INT)], BOOL, "is_zero"),
        _sig("empty", [], Refine("x", INT, Op("is_empty", (Var("x"),))), "zero"),
        _sig("push", [("v", INT), ("s", INT)], nonempty, "depth_push"),
        _sig("pop", [("s", nonempty)], INT, "depth_pop"),
    )


def table_impl(rows: dict[tuple, object], default: object | None) -> Callable:
    """Finite-table denotation; missing rows fall back to ``default`` or are undefined."""

    def impl(*args):
        key = tuple(args)
        for k, v in rows.items():
            if len(k) == len(key) and all(type(a) is type(b) and a == b for a, b in zip(k, key)):
                return v
        if default is None:
            raise KeyError(key)
        return default

    return impl


def check_shape(sig: OpSig) -> str | None:
    """Every parameter and the result must be a possibly refined base type."""
    for var, pty in sig.params:
        if not isinstance(unref(pty), Base):
            return f"parameter {var} of {sig.name} is not a refined base type"
    if not isinstance(unref(sig.result), Base):
        return f"result of {sig.name} is not a refined base type"
    return None
