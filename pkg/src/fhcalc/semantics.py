"""Call-by-value small-step evaluator with fussy cast semantics.

Casts check every refinement of their target type, including refinements
already guaranteed by the source type. Evaluation works on closed terms only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from . import signature as sigmod
from .signature import Signature
from .syntax import (
    ActiveCheck,
    App,
    Base,
    Blame,
    Cast,
    Const,
    Forall,
    Fun,
    Lam,
    Op,
    Refine,
    TApp,
    Term,
    TLam,
    Var,
    WaitCheck,
    all_names,
    fresh_name,
    is_value,
    mk_let,
    subst,
    subst_term,
    subst_type,
    TVar,
)

DEFAULT_FUEL = 10_000

# ---------------------------------------------------------------- evaluation contexts


@dataclass(frozen=True)
class OpFrame:
    name: str
    done: tuple
    rest: tuple


@dataclass(frozen=True)
class AppL:
    arg: Term


@dataclass(frozen=True)
class AppR:
    fn: Term


@dataclass(frozen=True)
class TyAppFrame:
    ty: object


@dataclass(frozen=True)
class WaitFrame:
    ref: Refine
    label: str


@dataclass(frozen=True)
class ActiveFrame:
    ref: Refine
    value: Term
    label: str


Frame = Union[OpFrame, AppL, AppR, TyAppFrame, WaitFrame, ActiveFrame]
# An evaluation context is a tuple of frames, outermost first; () is the hole.
EvalContext = tuple
HOLE: EvalContext = ()


def plug(ctx: EvalContext, e: Term) -> Term:
    for frame in reversed(ctx):
        match frame:
            case OpFrame(name, done, rest):
                e = Op(name, done + (e,) + rest)
            case AppL(arg):
                e = App(e, arg)
            case AppR(fn):
                e = App(fn, e)
            case TyAppFrame(ty):
                e = TApp(e, ty)
            case WaitFrame(ref, label):
                e = WaitCheck(ref, e, label)
            case ActiveFrame(ref, value, label):
                e = ActiveCheck(ref, e, value, label)
    return e


# ---------------------------------------------------------------- outcomes


@dataclass(frozen=True)
class Value:
    term: Term


@dataclass(frozen=True)
class Blamed:
    label: str


@dataclass(frozen=True)
class Stuck:
    term: Term


@dataclass(frozen=True)
class FuelExhausted:
    term: Term


Outcome = Union[Value, Blamed, Stuck, FuelExhausted]


def outcome_kind(o: Outcome) -> str:
    return type(o).__name__


def show_outcome(o: Outcome) -> str:
    match o:
        case Value(t):
            return str(t)
        case Blamed(label):
            return f"blame {label}"
        case Stuck(t):
            return f"stuck {t}"
        case FuelExhausted(t):
            return "fuel exhausted"
    return repr(o)


# ---------------------------------------------------------------- primitive operations


class _Undefined(Exception):
    pass


def op_denotation(name: str, args: list, sig: Signature = sigmod.DEFAULT) -> Const | None:
    """Apply the denotation of ``name`` to constants; ``None`` when undefined,
    which happens exactly when an argument violates a parameter refinement."""
    opsig = sig[name]
    if len(args) != opsig.arity or not all(isinstance(a, Const) for a in args):
        return None
    bound: dict = {}
    for (var, pty), k in zip(opsig.params, args):
        base = pty
        while isinstance(base, Refine):
            base = base.base
        if not isinstance(base, Base) or k.base != base.name:
            return None
        if isinstance(pty, Refine) and not satisfies_refinements(subst(pty, bound), k, sig):
            return None
        bound[var] = k
    try:
        result = opsig.impl(*(k.value for k in args))
    except (KeyError, ZeroDivisionError, ValueError, _Undefined):
        return None
    return Const(result)


def satisfies_refinements(ty, k: Term, sig: Signature, fuel: int = 1000) -> bool:
    """Does the closed value ``k`` pass every refinement of ``ty``?"""
    while isinstance(ty, Refine):
        out = evaluate(subst_term(ty.pred, k, ty.var), fuel, sig)
        if not (isinstance(out, Value) and out.term == Const(True)):
            return False
        ty = ty.base
    return True


# ---------------------------------------------------------------- reduction


def _fun_wrapper_var(label: str, index: int, avoid: set[str]) -> str:
    stem = "y_" + re.sub(r"[^A-Za-z0-9_]", "", label)
    return fresh_name(f"{stem}{index}", avoid)


def reduce(e: Term, sig: Signature = sigmod.DEFAULT, index: int = 0) -> Term | None:
    """One reduction step at the root of a closed term, or ``None`` if ``e``
    is not a redex. ``index`` seeds the name of the variable R_Fun introduces."""
    match e:
        case Op(name, args):
            if name in sig and all(isinstance(a, Const) for a in args):
                return op_denotation(name, list(args), sig)
            return None
        case App(Lam(var, _, body), arg) if is_value(arg):
            return subst_term(body, arg, var)
        case App(Cast(src, tgt, label), v) if is_value(v):
            return _reduce_cast(src, tgt, label, v, index)
        case TApp(TLam(tvar, body), ty):
            return subst_type(body, ty, tvar)
        case WaitCheck(ref, v, label) if is_value(v):
            return ActiveCheck(ref, subst_term(ref.pred, v, ref.var), v, label)
        case ActiveCheck(ref, Const(True), v, label) if is_value(v):
            return v
        case ActiveCheck(ref, Const(False), v, label) if is_value(v):
            return Blame(label)
    return None


def _reduce_cast(src, tgt, label, v, index):
    # R_Forget peels source refinements one layer at a time
    if isinstance(src, Refine):
        return App(Cast(src.base, tgt, label), v)
    if isinstance(tgt, Refine):
        return WaitCheck(tgt, App(Cast(src, tgt.base, label), v), label)
    match src, tgt:
        case Base(a), Base(b) if a == b:
            return v
        case Fun(x1, t11, t12), Fun(x2, t21, t22):
            avoid = all_names(t12) | all_names(t22) | all_names(t21) | {x1, x2}
            y = _fun_wrapper_var(label, index, avoid)
            if x2.startswith("_"):
                # non-dependent arrows carry a placeholder binder; name the parameter
                x = fresh_name("x", avoid | {y})
                t22, x2 = subst_term(t22, Var(x), x2), x
            inner = App(Cast(subst_term(t12, Var(y), x1), t22, label), App(v, Var(y)))
            return Lam(x2, t21, mk_let(y, t11, App(Cast(t21, t11, label), Var(x2)), inner))
        case Forall(a1, t1), Forall(a2, t2):
            body2 = subst_type(t2, TVar(a1), a2) if a1 != a2 else t2
            return TLam(a1, App(Cast(t1, body2, label), TApp(v, TVar(a1))))
    return None


def is_redex(e: Term, sig: Signature = sigmod.DEFAULT) -> bool:
    """Same answer as ``reduce(e) is not None`` without building the contractum."""
    match e:
        case Op(name, args):
            return name in sig and all(isinstance(a, Const) for a in args) and op_denotation(name, list(args), sig) is not None
        case App(Lam(), arg):
            return is_value(arg)
        case App(Cast(src, tgt, _), v) if is_value(v):
            if isinstance(src, Refine) or isinstance(tgt, Refine):
                return True
            match src, tgt:
                case Base(a), Base(b):
                    return a == b
                case (Fun(), Fun()) | (Forall(), Forall()):
                    return True
            return False
        case TApp(TLam(), _):
            return True
        case WaitCheck(_, v, _):
            return is_value(v)
        case ActiveCheck(_, Const(value), v, _):
            return isinstance(value, bool) and is_value(v)
    return False


# ---------------------------------------------------------------- decomposition


def decompose(e: Term, sig: Signature = sigmod.DEFAULT) -> tuple[EvalContext, Term] | None:
    """Split a closed non-value into an evaluation context and a redex or
    blame. ``None`` means the term is a value or stuck."""
    frames: list = []
    while True:
        if isinstance(e, Blame):
            return tuple(frames), e
        if is_value(e):
            return None
        match e:
            case Op(name, args):
                for i, a in enumerate(args):
                    if not is_value(a):
                        frames.append(OpFrame(name, args[:i], args[i + 1:]))
                        e = a
                        break
                else:
                    return (tuple(frames), e) if is_redex(e, sig) else None
            case App(fn, arg):
                if not is_value(fn):
                    frames.append(AppL(arg))
                    e = fn
                elif not is_value(arg):
                    frames.append(AppR(fn))
                    e = arg
                else:
                    return (tuple(frames), e) if is_redex(e, sig) else None
            case TApp(fn, ty):
                if not is_value(fn):
                    frames.append(TyAppFrame(ty))
                    e = fn
                else:
                    return (tuple(frames), e) if is_redex(e, sig) else None
            case WaitCheck(ref, subject, label):
                if not is_value(subject):
                    frames.append(WaitFrame(ref, label))
                    e = subject
                else:
                    return tuple(frames), e
            case ActiveCheck(ref, state, value, label):
                if not is_value(state):
                    frames.append(ActiveFrame(ref, value, label))
                    e = state
                else:
                    return (tuple(frames), e) if is_redex(e, sig) else None
            case _:
                return None  # free variable: only open terms get here


def step(e: Term, sig: Signature = sigmod.DEFAULT, index: int = 0) -> Term | None:
    """One evaluation step; ``None`` for values, blame and stuck terms."""
    d = decompose(e, sig)
    if d is None:
        return None
    ctx, focus = d
    if isinstance(focus, Blame):
        return focus if ctx else None
    return plug(ctx, reduce(focus, sig, index))


def classify(e: Term) -> Outcome:
    if is_value(e):
        return Value(e)
    if isinstance(e, Blame):
        return Blamed(e.label)
    return Stuck(e)


def evaluate(e: Term, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT) -> Outcome:
    for i in range(fuel):
        nxt = step(e, sig, i)
        if nxt is None:
            return classify(e)
        e = nxt
    if step(e, sig, fuel) is None:
        return classify(e)
    return FuelExhausted(e)


def trace(e: Term, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT) -> list[Term]:
    out = [e]
    for i in range(fuel):
        nxt = step(e, sig, i)
        if nxt is None:
            break
        out.append(nxt)
        e = nxt
    return out
