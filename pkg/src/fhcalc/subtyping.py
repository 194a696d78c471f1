"""Subtyping with a three-valued satisfaction prover.

``Yes`` is only returned when a sound tactic proved every satisfaction leaf.
``No`` always carries a closing substitution under which the refinement
evaluates to ``false`` or blame; it can be replayed with :func:`replay`.
Anything else is ``Unknown``, which never licenses a rewrite.
"""

from __future__ import annotations

import itertools
import random
import zlib
from dataclasses import dataclass, field
from typing import Union

from . import signature as sigmod
from .generate import ClosingSubst, gen_closing_subst
from .semantics import Blamed, Value, evaluate, op_denotation, satisfies_refinements
from .signature import Signature
from .syntax import (
    BOOL,
    ActiveCheck,
    App,
    Base,
    Cast,
    Const,
    Context,
    Forall,
    Fun,
    Lam,
    Op,
    Refine,
    TApp,
    TermBind,
    TLam,
    TVar,
    Type,
    Var,
    WaitCheck,
    alpha_eq,
    free_vars,
    fresh_name,
    is_closed,
    is_value,
    subst_term,
    subst_type,
    unref,
)
from .typesystem import normalize

SUB_LABEL = "§sub"
SELF_LABEL = "§self"
RESERVED_LABELS = (SUB_LABEL, SELF_LABEL)

TACTICS = ("literal-true", "closed-eval", "hypothesis-match", "interval", "bool-enumeration")


@dataclass(frozen=True)
class ProverConfig:
    tactics: tuple = TACTICS
    samples: int = 60  # refutation attempts; 0 disables refutation
    fuel: int = 2000
    seed: int = 0
    max_bool_vars: int = 10

    def with_tactics(self, names) -> "ProverConfig":
        unknown = set(names) - set(TACTICS)
        if unknown:
            raise ValueError(f"unknown tactics: {', '.join(sorted(unknown))}")
        return ProverConfig(tuple(names), self.samples, self.fuel, self.seed, self.max_bool_vars)


DEFAULT_CONFIG = ProverConfig()


# ---------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: str
    children: tuple = ()
    tactic: str | None = None


@dataclass(frozen=True)
class Witness:
    context: Context
    goal: object  # the refinement term, before substitution
    subst: ClosingSubst = field(compare=False)
    outcome: object = None

    def replay(self, sig: Signature = sigmod.DEFAULT, fuel: int = 2000):
        return evaluate(self.subst.apply(self.goal), fuel, sig)


@dataclass(frozen=True)
class Yes:
    derivation: Derivation


@dataclass(frozen=True)
class No:
    reason: str
    witness: Witness | None = None


@dataclass(frozen=True)
class Unknown:
    reason: str


Verdict = Union[Yes, No, Unknown]


def is_yes(v: Verdict) -> bool:
    return isinstance(v, Yes)


def replay(witness: Witness, sig: Signature = sigmod.DEFAULT) -> bool:
    """Does the witness still refute its goal?"""
    out = witness.replay(sig)
    return isinstance(out, Blamed) or out == Value(Const(False))


# ---------------------------------------------------------------- simplification

def simplify(e):
    """Erase the machine-inserted upcast wrappers around variables and
    contract lets whose bound term is a variable or value. Only used to
    compare and abstractly interpret refinements; never to evaluate."""
    match e:
        case App(Cast(_, _, label), Var() as x) if label in RESERVED_LABELS:
            return x
        case App(fn, arg):
            fn, arg = simplify(fn), simplify(arg)
            if isinstance(fn, Cast) and fn.label in RESERVED_LABELS and isinstance(arg, Var):
                return arg
            if isinstance(fn, Lam) and (isinstance(arg, Var) or is_value(arg)):
                return simplify(subst_term(fn.body, arg, fn.var))
            return App(fn, arg)
        case Op(name, args):
            return Op(name, tuple(simplify(a) for a in args))
        case Lam(x, t, b):
            return Lam(x, t, simplify(b))
        case TLam(a, b):
            return TLam(a, simplify(b))
        case TApp(f, t):
            return TApp(simplify(f), t)
        case WaitCheck(r, s, label):
            return WaitCheck(r, simplify(s), label)
        case ActiveCheck(r, s, v, label):
            return ActiveCheck(r, simplify(s), simplify(v), label)
    return e


def hypotheses(ctx: Context) -> list:
    """Refinements guaranteed by the context, instantiated at their variables."""
    facts = []
    for b in ctx.term_binds():
        ty = b.ty
        while isinstance(ty, Refine):
            facts.append(subst_term(ty.pred, Var(b.name), ty.var))
            ty = ty.base
    return facts


# ---------------------------------------------------------------- interval tactic


@dataclass(frozen=True)
class IntAbs:
    lo: int | None = None  # None is unbounded
    hi: int | None = None
    excl: frozenset = frozenset()

    def singleton(self):
        if self.lo is not None and self.lo == self.hi and self.lo not in self.excl:
            return self.lo
        return None

    def empty(self) -> bool:
        if self.lo is not None and self.hi is not None:
            if self.lo > self.hi:
                return True
            if self.hi - self.lo < 64:
                return all(n in self.excl for n in range(self.lo, self.hi + 1))
        return False

    def meet(self, other: "IntAbs") -> "IntAbs":
        lo = _max(self.lo, other.lo)
        hi = _min(self.hi, other.hi)
        return IntAbs(lo, hi, self.excl | other.excl).tidy()

    def tidy(self) -> "IntAbs":
        lo, hi, excl = self.lo, self.hi, self.excl
        while lo is not None and lo in excl and (hi is None or lo <= hi):
            lo += 1
        while hi is not None and hi in excl and (lo is None or lo <= hi):
            hi -= 1
        return IntAbs(lo, hi, excl)

    def contains(self, n: int) -> bool:
        return (self.lo is None or self.lo <= n) and (self.hi is None or n <= self.hi) and n not in self.excl


def _max(a, b):
    if a is None:
        return b
    return a if b is None else max(a, b)


def _min(a, b):
    if a is None:
        return b
    return a if b is None else min(a, b)


TOP_INT = IntAbs()
BOOLS = frozenset({True, False})


class _Infeasible(Exception):
    pass


class IntervalProver:
    """Abstract interpretation of a Boolean refinement over integer
    intervals (with excluded points) and sets of Booleans."""

    def __init__(self, ctx: Context, sig: Signature, fuel: int):
        self.sig = sig
        self.fuel = fuel
        self.env: dict = {}
        for b in ctx.term_binds():
            base = unref(b.ty)
            if base == Base("Int"):
                self.env[b.name] = TOP_INT
            elif base == BOOL:
                self.env[b.name] = BOOLS

    def assume_all(self, facts: list) -> None:
        for _ in range(4):
            before = dict(self.env)
            for f in facts:
                self.assume(f, True)
            if self.env == before:
                break

    def _set(self, x: str, val) -> None:
        cur = self.env[x]
        new = cur.meet(val) if isinstance(cur, IntAbs) else cur & val
        if (isinstance(new, IntAbs) and new.empty()) or new == frozenset():
            raise _Infeasible
        self.env[x] = new

    def assume(self, e, truth: bool) -> None:
        match e:
            case Const(value) if isinstance(value, bool):
                if value != truth:
                    raise _Infeasible
            case Var(x) if self.env.get(x) is not None and not isinstance(self.env[x], IntAbs):
                self._set(x, frozenset({truth}))
            case Op("not", (a,)):
                self.assume(a, not truth)
            case Op("and", (a, b)) if truth:
                self.assume(a, True)
                self.assume(b, True)
            case Op("or", (a, b)) if not truth:
                self.assume(a, False)
                self.assume(b, False)
            case Op("prime?", (Var(x),)) if truth and isinstance(self.env.get(x), IntAbs):
                self._set(x, IntAbs(2, None))
            case Op("eqBool", (a, b)):
                self._compare_bool(a, b, truth)
            case Op(name, (a, b)) if name in _CMP:
                self._compare(name if truth else _NEG[name], a, b)

    def _compare_bool(self, a, b, truth: bool) -> None:
        for x, other in ((a, b), (b, a)):
            if isinstance(x, Var) and isinstance(self.env.get(x.name), frozenset):
                v = self.eval(other)
                if isinstance(v, frozenset) and len(v) == 1:
                    (k,) = v
                    self._set(x.name, frozenset({k if truth else not k}))

    def _compare(self, name: str, a, b) -> None:
        for x, other, op in ((a, b, name), (b, a, _FLIP[name])):
            if not (isinstance(x, Var) and isinstance(self.env.get(x.name), IntAbs)):
                continue
            v = self.eval(other)
            if not isinstance(v, IntAbs):
                continue
            match op:
                case "lt":
                    self._set(x.name, IntAbs(None, None if v.hi is None else v.hi - 1))
                case "le":
                    self._set(x.name, IntAbs(None, v.hi))
                case "gt":
                    self._set(x.name, IntAbs(None if v.lo is None else v.lo + 1, None))
                case "ge":
                    self._set(x.name, IntAbs(v.lo, None))
                case "eqInt":
                    self._set(x.name, IntAbs(v.lo, v.hi, v.excl))
                case "neq":
                    k = v.singleton()
                    if k is not None:
                        self._set(x.name, IntAbs(excl=frozenset({k})))

    def eval(self, e):
        """Abstract value: an ``IntAbs``, a set of Booleans, or ``None``."""
        match e:
            case Const(value):
                if isinstance(value, bool):
                    return frozenset({value})
                return IntAbs(value, value)
            case Var(x):
                return self.env.get(x)
            case Op(name, args):
                vals = [self.eval(a) for a in args]
                concrete = [_concrete(v) for v in vals]
                if name in self.sig and all(c is not None for c in concrete):
                    k = op_denotation(name, [Const(c) for c in concrete], self.sig)
                    return None if k is None else self.eval(k)
                return _abstract_op(name, vals)
        if is_closed(e):
            out = evaluate(e, self.fuel, self.sig)
            if isinstance(out, Value) and isinstance(out.term, Const):
                return self.eval(out.term)
        return None


_CMP = {"lt", "le", "gt", "ge", "eqInt", "neq"}
_NEG = {"lt": "ge", "le": "gt", "gt": "le", "ge": "lt", "eqInt": "neq", "neq": "eqInt"}
_FLIP = {"lt": "gt", "le": "ge", "gt": "lt", "ge": "le", "eqInt": "eqInt", "neq": "neq"}


def _concrete(v):
    if isinstance(v, IntAbs):
        return v.singleton()
    if isinstance(v, frozenset) and len(v) == 1:
        return next(iter(v))
    return None


def _abstract_op(name: str, vals: list):
    if name in _CMP and all(isinstance(v, IntAbs) for v in vals):
        return _abstract_cmp(name, *vals)
    if name == "add" and all(isinstance(v, IntAbs) for v in vals):
        a, b = vals
        lo = None if a.lo is None or b.lo is None else a.lo + b.lo
        hi = None if a.hi is None or b.hi is None else a.hi + b.hi
        return IntAbs(lo, hi)
    if name == "sub" and all(isinstance(v, IntAbs) for v in vals):
        a, b = vals
        lo = None if a.lo is None or b.hi is None else a.lo - b.hi
        hi = None if a.hi is None or b.lo is None else a.hi - b.lo
        return IntAbs(lo, hi)
    if name == "prime?" and isinstance(vals[0], IntAbs):
        if vals[0].hi is not None and vals[0].hi < 2:
            return frozenset({False})
        return BOOLS
    if name in ("not", "and", "or", "eqBool") and all(isinstance(v, frozenset) for v in vals):
        match name:
            case "not":
                return frozenset(not a for a in vals[0])
            case "and":
                return frozenset(a and b for a in vals[0] for b in vals[1])
            case "or":
                return frozenset(a or b for a in vals[0] for b in vals[1])
            case "eqBool":
                return frozenset(a == b for a in vals[0] for b in vals[1])
    if name in ("not", "and", "or", "eqBool", "prime?") or name in _CMP:
        return BOOLS
    return None


def _abstract_cmp(name: str, a: IntAbs, b: IntAbs):
    def lt(x, y):  # definitely x < y / definitely x >= y
        if x.hi is not None and y.lo is not None and x.hi < y.lo:
            return frozenset({True})
        if x.lo is not None and y.hi is not None and x.lo >= y.hi:
            return frozenset({False})
        return BOOLS

    match name:
        case "lt":
            return lt(a, b)
        case "gt":
            return lt(b, a)
        case "le":
            return frozenset(not v for v in lt(b, a))
        case "ge":
            return frozenset(not v for v in lt(a, b))
        case "eqInt" | "neq":
            ka, kb = a.singleton(), b.singleton()
            if ka is not None and kb is not None:
                eq = frozenset({ka == kb})
            elif (ka is not None and not b.contains(ka)) or (kb is not None and not a.contains(kb)):
                eq = frozenset({False})
            elif (a.hi is not None and b.lo is not None and a.hi < b.lo) or (b.hi is not None and a.lo is not None and b.hi < a.lo):
                eq = frozenset({False})
            else:
                eq = BOOLS
            return eq if name == "eqInt" else frozenset(not v for v in eq)
    return BOOLS


# ---------------------------------------------------------------- satisfaction


def _leaf(ctx: Context, goal, tactic: str) -> Yes:
    return Yes(Derivation("Satis", _show_judgment(ctx, goal), (), tactic))


def _show_judgment(ctx: Context, goal) -> str:
    binds = ", ".join(f"{b.name}:{b.ty}" if isinstance(b, TermBind) else b.name for b in ctx)
    return f"{binds} |= {goal}"


def satisfies(ctx: Context, goal, sig: Signature = sigmod.DEFAULT, cfg: ProverConfig = DEFAULT_CONFIG) -> Verdict:
    """Does ``goal`` evaluate to ``true`` under every closing substitution
    respecting ``ctx``?"""
    tactics = cfg.tactics
    simple = simplify(goal)
    if "literal-true" in tactics and simple == Const(True):
        return _leaf(ctx, goal, "literal-true")
    if "closed-eval" in tactics and is_closed(goal):
        out = evaluate(goal, cfg.fuel, sig)
        if out == Value(Const(True)):
            return _leaf(ctx, goal, "closed-eval")
        if isinstance(out, Blamed) or out == Value(Const(False)):
            sigma = gen_closing_subst(ctx, random.Random(cfg.seed), sig)
            if sigma is not None:
                return No(f"{goal} evaluates to {_show_out(out)}", Witness(ctx, goal, sigma, out))
    if "hypothesis-match" in tactics and _hypothesis_match(ctx, simple, sig, cfg):
        return _leaf(ctx, goal, "hypothesis-match")
    if "interval" in tactics and _interval(ctx, simple, sig, cfg):
        return _leaf(ctx, goal, "interval")
    if "bool-enumeration" in tactics:
        v = _bool_enumeration(ctx, goal, sig, cfg)
        if v is not None:
            return v
    if cfg.samples > 0:
        v = _refute(ctx, goal, sig, cfg)
        if v is not None:
            return v
    return Unknown(f"no tactic proved {_show_judgment(ctx, goal)}")


def _show_out(out) -> str:
    return f"blame {out.label}" if isinstance(out, Blamed) else str(out.term)


def _normal(e, sig, cfg):
    n, _ = normalize(e, sig, cfg.fuel)
    return simplify(n)


def _hypothesis_match(ctx: Context, goal, sig, cfg) -> bool:
    facts = [_normal(simplify(f), sig, cfg) for f in hypotheses(ctx)]
    goal = _normal(goal, sig, cfg)

    def proved(g) -> bool:
        if g == Const(True):
            return True
        if any(alpha_eq(g, f) for f in facts):
            return True
        # a conjunction among the facts guarantees each conjunct
        if any(_conjunct(g, f) for f in facts):
            return True
        match g:
            case Op("and", (a, b)):
                return proved(a) and proved(b)
            case Op("or", (a, b)):
                return proved(a) or proved(b)
        return False

    return proved(goal)


def _conjunct(g, fact) -> bool:
    match fact:
        case Op("and", (a, b)):
            return alpha_eq(g, a) or alpha_eq(g, b) or _conjunct(g, a) or _conjunct(g, b)
    return False


def _interval(ctx: Context, goal, sig, cfg) -> bool:
    prover = IntervalProver(ctx, sig, cfg.fuel)
    try:
        prover.assume_all([simplify(f) for f in hypotheses(ctx)])
    except _Infeasible:
        return True  # no substitution respects the context
    return prover.eval(goal) == frozenset({True})


def _relevant(ctx: Context, goal) -> list:
    """Term bindings the goal depends on, closed under type dependencies."""
    need = set(free_vars(goal)[0])
    binds = ctx.term_binds()
    for b in reversed(binds):
        if b.name in need:
            need |= free_vars(b.ty)[0]
    return [b for b in binds if b.name in need]


def _bool_enumeration(ctx: Context, goal, sig, cfg) -> Verdict | None:
    if free_vars(goal)[1]:
        return None
    rel = _relevant(ctx, goal)
    if any(unref(b.ty) != BOOL for b in rel) or len(rel) > cfg.max_bool_vars:
        return None
    everything = len(rel) == len(ctx.term_binds()) and not ctx.tvars()
    for values in itertools.product((True, False), repeat=len(rel)):
        sigma = ClosingSubst()
        ok = True
        for b, k in zip(rel, values):
            if not satisfies_refinements(sigma.apply(b.ty), Const(k), sig, cfg.fuel):
                ok = False
                break
            sigma.terms[b.name] = Const(k)
        if not ok:
            continue
        out = evaluate(sigma.apply(goal), cfg.fuel, sig)
        if out == Value(Const(True)):
            continue
        if everything and (isinstance(out, Blamed) or out == Value(Const(False))):
            return No(f"{goal} is {_show_out(out)} under {sigma.show()}", Witness(ctx, goal, sigma, out))
        return None
    return _leaf(ctx, goal, "bool-enumeration")


def _refute(ctx: Context, goal, sig, cfg) -> Verdict | None:
    rng = random.Random(cfg.seed ^ zlib.crc32(str(goal).encode()))
    for _ in range(cfg.samples):
        sigma = gen_closing_subst(ctx, rng, sig, tries=1)
        if sigma is None:
            continue
        out = evaluate(sigma.apply(goal), cfg.fuel, sig)
        if isinstance(out, Blamed) or out == Value(Const(False)):
            return No(f"{goal} is {_show_out(out)} under {sigma.show()}", Witness(ctx, goal, sigma, out))
    return None


# ---------------------------------------------------------------- subtyping


def _fresh_for(ctx: Context, x: str, *nodes) -> str:
    if x not in ctx.names() and not x.startswith("_"):
        return x
    avoid = set(ctx.names())
    for n in nodes:
        avoid |= free_vars(n)[0]
    return fresh_name("x" if x.startswith("_") else x, avoid)


def subtype(ctx: Context, t1: Type, t2: Type, sig: Signature = sigmod.DEFAULT, cfg: ProverConfig = DEFAULT_CONFIG) -> Verdict:
    judgment = f"{t1} <: {t2}"
    paths: list[Verdict] = []
    if isinstance(t1, Refine):
        sub = subtype(ctx, t1.base, t2, sig, cfg)
        paths.append(_wrap("S_RefineL", judgment, sub))
    if isinstance(t2, Refine):
        paths.append(_refine_right(ctx, t1, t2, judgment, sig, cfg))
    if paths:
        return _any(paths)
    match t1, t2:
        case Base(a), Base(b):
            if a == b:
                return Yes(Derivation("S_Base", judgment))
        case TVar(a), TVar(b):
            if a == b:
                return Yes(Derivation("S_TVar", judgment))
        case Fun(x1, t11, t12), Fun(x2, t21, t22):
            dom = subtype(ctx, t21, t11, sig, cfg)
            x = _fresh_for(ctx, x2, t12, t22)
            wrapped = App(Cast(t21, t11, SUB_LABEL), Var(x))
            cod = subtype(ctx.bind(x, t21), subst_term(t12, wrapped, x1), subst_term(t22, Var(x), x2), sig, cfg)
            return _all("S_Fun", judgment, [dom, cod])
        case Forall(a1, b1), Forall(a2, b2):
            a = a1 if a1 not in ctx.names() else fresh_name(a1, ctx.names() | free_vars(b1)[1] | free_vars(b2)[1])
            body = subtype(ctx.bind_type(a), subst_type(b1, TVar(a), a1), subst_type(b2, TVar(a), a2), sig, cfg)
            return _all("S_Forall", judgment, [body])
    return No(f"no subtyping rule relates {t1} and {t2}")


def _refine_right(ctx, t1, t2: Refine, judgment, sig, cfg) -> Verdict:
    under = subtype(ctx, t1, t2.base, sig, cfg)
    x = _fresh_for(ctx, t2.var, t2.pred)
    binding_ty = t1
    goal = subst_term(t2.pred, App(Cast(t1, t2.base, SUB_LABEL), Var(x)), t2.var)
    sat = satisfies(ctx.bind(x, binding_ty), goal, sig, cfg)
    return _all("S_RefineR", judgment, [under, sat])


def _wrap(rule: str, judgment: str, v: Verdict) -> Verdict:
    if isinstance(v, Yes):
        return Yes(Derivation(rule, judgment, (v.derivation,)))
    return v


def _all(rule: str, judgment: str, parts: list) -> Verdict:
    for p in parts:
        if isinstance(p, No):
            return p
    for p in parts:
        if isinstance(p, Unknown):
            return p
    return Yes(Derivation(rule, judgment, tuple(p.derivation for p in parts)))


def _any(paths: list) -> Verdict:
    for p in paths:
        if isinstance(p, Yes):
            return p
    for p in paths:
        if isinstance(p, Unknown):
            return p
    return paths[-1]


# ---------------------------------------------------------------- reporting


def explain(v: Verdict) -> str:
    match v:
        case Yes(d):
            return "yes\n" + "\n".join(_tree(d, 1))
        case No(reason, w):
            lines = [f"no: {reason}"]
            if w is not None:
                lines.append(f"  substitution {w.subst.show()}")
                lines.append(f"  refinement   {w.goal}")
                lines.append(f"  outcome      {_show_out(w.outcome)}")
            return "\n".join(lines)
        case Unknown(reason):
            return f"unknown: {reason}"
    return repr(v)


def _tree(d: Derivation, depth: int):
    pad = "  " * depth
    tag = f" [{d.tactic}]" if d.tactic else ""
    yield f"{pad}{d.rule}{tag}: {d.conclusion}"
    for c in d.children:
        yield from _tree(c, depth + 1)
