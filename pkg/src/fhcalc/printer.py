"""ASCII pretty printer. Output re-parses to an alpha-equivalent node."""

from __future__ import annotations

from .signature import INFIX
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
    TLam,
    TVar,
    Var,
    WaitCheck,
    free_vars,
    is_type,
)

# binding strength of infix operators: (precedence, left operand, right operand)
_INFIX_PREC = {
    "||": (1, 1, 2),
    "&&": (2, 2, 3),
    "==": (3, 4, 4),
    "!=": (3, 4, 4),
    "<": (3, 4, 4),
    "<=": (3, 4, 4),
    ">": (3, 4, 4),
    ">=": (3, 4, 4),
    "+": (4, 4, 5),
    "-": (4, 4, 5),
    "*": (5, 5, 6),
}
APP_PREC = 6
ATOM_PREC = 7


def show_type(ty, prec: int = 0) -> str:
    match ty:
        case Base(name):
            return name
        case TVar(name):
            return name
        case Refine(var, base, pred):
            return "{" + f"{var}:{show_type(base)} | {show_term(pred)}" + "}"
        case Fun(var, dom, cod):
            if var in free_vars(cod)[0]:
                s = f"({var}:{show_type(dom)}) -> {show_type(cod)}"
            else:
                s = f"{show_type(dom, 1)} -> {show_type(cod)}"
            return f"({s})" if prec > 0 else s
        case Forall(tvar, body):
            s = f"forall {tvar}. {show_type(body)}"
            return f"({s})" if prec > 0 else s
    raise TypeError(f"not a type: {ty!r}")


def _paren(s: str, own: int, need: int) -> str:
    return f"({s})" if own < need else s


def show_term(e, prec: int = 0) -> str:
    match e:
        case Const(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            return f"({value})" if value < 0 else str(value)
        case Var(name):
            return name
        case Blame(label):
            return f"blame {label}"
        # casts and checks start with "<", so as arguments they need parentheses
        # to keep them apart from the comparison operator
        case Cast(src, tgt, label):
            return _paren(f"<{show_type(src)} => {show_type(tgt)}>^{label}", APP_PREC, prec)
        case WaitCheck(ref, subject, label):
            return _paren(f"<<{show_type(ref)}, {show_term(subject)}>>^{label}", APP_PREC, prec)
        case ActiveCheck(ref, state, value, label):
            s = f"<{show_type(ref)}, {show_term(state)}, {show_term(value)}>^{label}"
            return _paren(s, APP_PREC, prec)
        case Op(name, args):
            sym = INFIX.get(name)
            if sym is not None and len(args) == 2:
                own, lp, rp = _INFIX_PREC[sym]
                s = f"{show_term(args[0], lp)} {sym} {show_term(args[1], rp)}"
                return _paren(s, own, prec)
            return f"{name}(" + ", ".join(show_term(a) for a in args) + ")"
        case Lam(var, annot, body):
            return _paren(f"fun ({var}:{show_type(annot)}) {show_term(body)}", 0, prec)
        case TLam(tvar, body):
            return _paren(f"tyfun ({tvar}) {show_term(body)}", 0, prec)
        case App(Lam(var, annot, body), arg):
            s = f"let {var}:{show_type(annot)} = {show_term(arg)} in {show_term(body)}"
            return _paren(s, 0, prec)
        case App(fn, arg):
            return _paren(f"{show_term(fn, APP_PREC)} {show_term(arg, ATOM_PREC)}", APP_PREC, prec)
        case TApp(fn, ty):
            return _paren(f"{show_term(fn, APP_PREC)} [{show_type(ty)}]", APP_PREC, prec)
    raise TypeError(f"not a term: {e!r}")


def show(node) -> str:
    return show_type(node) if is_type(node) else show_term(node)
