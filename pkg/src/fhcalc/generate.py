"""Random, type-directed generation of types, terms, values, closing
substitutions and static evaluation contexts.

Refinements come from a small curated pool so that the provers and every
reduction rule get exercised. Generated terms are meant to typecheck by
construction; callers that need a guarantee filter with the type checker.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import signature as sigmod
from .semantics import AppL, AppR, OpFrame, TyAppFrame, plug, satisfies_refinements, trace
from .signature import Signature
from .syntax import (
    BOOL,
    EMPTY,
    INT,
    ActiveCheck,
    App,
    Base,
    Blame,
    Cast,
    Const,
    Context,
    Forall,
    Fun,
    Lam,
    Op,
    Refine,
    TApp,
    TLam,
    TVar,
    TyBind,
    Type,
    Var,
    WaitCheck,
    free_vars,
    fresh_name,
    identity,
    is_closed,
    mk_let,
    subst,
    subst_term,
    subst_type,
    unref,
)
from .typesystem import compatible

LABELS = ("l", "m", "n")
GEN_LABEL = "gen"  # casts inside generated substitution values


# ---------------------------------------------------------------- refinements and types


def as_base(x: str, ty: Type, label: str = "l"):
    """Variable ``x`` of type ``ty`` seen at its underlying base type; there
    is no subsumption, so a refined variable needs an upcast."""
    base = unref(ty)
    return Var(x) if ty == base else App(Cast(ty, base, label), Var(x))


def _deps(scope: dict, base: str) -> list:
    return [as_base(n, t) for n, t in scope.items() if unref(t) == Base(base)]


def int_refinement(v, rng: random.Random, deps: list = ()) -> Op | Const:
    pool = [
        lambda: Const(True),
        lambda: Op("gt", (v, Const(0))),
        lambda: Op("ge", (v, Const(0))),
        lambda: Op("neq", (v, Const(0))),
        lambda: Op("eqInt", (v, Const(rng.choice([0, 1, 2, 3, 5])))),
        lambda: Op("prime?", (v,)),
        lambda: Op("gt", (v, Const(2))),
        lambda: Op("lt", (v, Const(10))),
    ]
    if deps and rng.random() < 0.4:
        d = rng.choice(deps)
        return rng.choice([Op("ge", (v, d)), Op("neq", (v, d)), Op("gt", (Op("add", (v, d)), Const(0)))])
    return rng.choice(pool)()


def bool_refinement(v, rng: random.Random, deps: list = ()) -> Op | Const | Var:
    pool = [
        Const(True),
        v,
        Op("not", (v,)),
        Op("eqBool", (v, Const(rng.random() < 0.5))),
        Op("or", (v, Op("not", (v,)))),
        Op("and", (v, Const(True))),
    ]
    if deps and rng.random() < 0.3:
        return Op("or", (v, rng.choice(deps)))
    return rng.choice(pool)


def gen_refinement(base: Base, rng: random.Random, scope: dict | None = None, var: str = "x") -> Refine:
    """A one- or two-layer refinement of ``base``; ``scope`` maps in-scope
    variable names to their types for dependent refinements."""
    scope = scope or {}
    var = fresh_name(var, set(scope))
    if base.name == "Int":
        ref = Refine(var, base, int_refinement(Var(var), rng, _deps(scope, "Int")))
        if rng.random() < 0.1:
            outer = fresh_name("w", set(scope) | {var})
            ref = Refine(outer, ref, int_refinement(as_base(outer, ref), rng))
        return ref
    return Refine(var, base, bool_refinement(Var(var), rng, _deps(scope, "Bool")))


def gen_base(rng: random.Random) -> Base:
    return INT if rng.random() < 0.65 else BOOL


def gen_type(rng: random.Random, depth: int = 2, tvars: tuple = (), scope: dict | None = None, poly: bool = True) -> Type:
    """A closed (relative to ``tvars`` and ``scope``) well-formed type."""
    scope = dict(scope or {})
    r = rng.random()
    if depth <= 0 or r < 0.45:
        if tvars and rng.random() < 0.25:
            return TVar(rng.choice(tvars))
        base = gen_base(rng)
        return gen_refinement(base, rng, scope) if rng.random() < 0.55 else base
    if poly and r < 0.55:
        a = fresh_name("a", set(tvars))
        x = fresh_name("x", set(scope))
        cod = gen_type(rng, depth - 1, tvars + (a,), scope, poly=False) if rng.random() < 0.4 else TVar(a)
        return Forall(a, Fun(x, TVar(a), cod))
    x = fresh_name("x", set(scope))
    dom = gen_type(rng, depth - 1, tvars, scope, poly=False)
    inner = dict(scope)
    if isinstance(unref(dom), Base):
        inner[x] = dom
    cod = gen_type(rng, depth - 1, tvars, inner, poly=False)
    return Fun(x, dom, cod)


def vary_refinements(ty: Type, rng: random.Random, scope: dict | None = None) -> Type:
    """A random type compatible with ``ty``: same skeleton, fresh refinements."""
    scope = dict(scope or {})
    match ty:
        case Refine() | Base():
            base = unref(ty)
            if isinstance(base, Base):
                r = rng.random()
                if r < 0.3:
                    return base
                if r < 0.5:
                    return ty
                return gen_refinement(base, rng, scope)
            return vary_refinements(base, rng, scope)
        case TVar():
            return ty
        case Fun(x, dom, cod):
            inner = dict(scope)
            # a dependent codomain may mention the domain type, so keep it
            d2 = dom if x in free_vars(cod)[0] else vary_refinements(dom, rng, scope)
            if isinstance(unref(d2), Base):
                inner[x] = d2
            # keep the codomain closed over the new domain binder only
            c2 = vary_refinements(cod, rng, inner)
            if x in free_vars(c2)[0] and not isinstance(unref(d2), Base):
                c2 = unref(c2)
            return Fun(x, d2, c2)
        case Forall(a, body):
            return Forall(a, vary_refinements(body, rng, scope))
    return ty


# ---------------------------------------------------------------- values


def int_candidates(ty: Type, rng: random.Random) -> list[int]:
    """Integers worth trying for a refinement: small numbers, the
    constants mentioned in the type and their neighbours."""
    found: set[int] = set()

    def walk(n):
        if isinstance(n, Const) and not isinstance(n.value, bool):
            found.update({n.value - 1, n.value, n.value + 1})
        match n:
            case Refine(_, b, p):
                walk(b)
                walk(p)
            case Op(_, args):
                for a in args:
                    walk(a)
            case App(f, a):
                walk(f)
                walk(a)
            case Lam(_, _, b):
                walk(b)

    walk(ty)
    out = [0, 1, 2, -1, 3, 5, 7] + sorted(found)
    out += [rng.randint(-20, 40) for _ in range(12)]
    rng.shuffle(out)
    return out


def gen_value(ty: Type, rng: random.Random, sig: Signature = sigmod.DEFAULT, fuel: int = 500, tries: int = 40):
    """A closed value of the closed type ``ty`` or ``None``."""
    base = unref(ty)
    if isinstance(base, Base):
        cands = [Const(b) for b in (True, False)] if base.name == "Bool" else [Const(n) for n in int_candidates(ty, rng)]
        if base.name == "Bool":
            rng.shuffle(cands)
        for k in cands[:tries]:
            if satisfies_refinements(ty, k, sig, fuel):
                return k
        return None
    if isinstance(ty, Refine):
        # refined function or polymorphic type: generate, then filter
        for _ in range(4):
            v = gen_value(base, rng, sig, fuel, tries)
            if v is not None and satisfies_refinements(ty, v, sig, fuel):
                return v
        return None
    match ty:
        case Fun(x, dom, cod):
            body = _gen_body(Context().bind(x, dom), cod, rng, sig)
            return None if body is None else Lam(x, dom, body)
        case Forall(a, body):
            inner = _gen_body(Context().bind_type(a), body, rng, sig)
            return None if inner is None else TLam(a, inner)
    return None


def _gen_body(ctx: Context, ty: Type, rng: random.Random, sig: Signature):
    """A term of type ``ty`` that uses only the variables of ``ctx``; the
    refinements it cannot guarantee statically are checked by a cast."""
    base = unref(ty)
    usable = [b for b in ctx.term_binds() if compatible(b.ty, ty)]
    if usable and rng.random() < 0.6:
        b = rng.choice(usable)
        return Var(b.name) if b.ty == ty else App(Cast(b.ty, ty, GEN_LABEL), Var(b.name))
    match base:
        case Base(name):
            if is_closed(ty):
                k = gen_value(ty, rng, sig)
                if k is not None:
                    # under binders a constant only has its plain base type
                    return k if ty == base else App(Cast(base, ty, GEN_LABEL), k)
            if name == "Int":
                k = Const(rng.choice([0, 1, 2, 3, -1, 7]))
                bv = [b for b in ctx.term_binds() if unref(b.ty) == INT]
                if bv and rng.random() < 0.5:
                    arg = Var(bv[0].name) if bv[0].ty == INT else App(Cast(bv[0].ty, INT, GEN_LABEL), Var(bv[0].name))
                    k = Op(rng.choice(["add", "sub"]), (arg, Const(rng.randint(0, 3))))
            else:
                k = Const(rng.random() < 0.5)
            return k if ty == base else App(Cast(base, ty, GEN_LABEL), k)
        case Fun(x, dom, cod):
            y = fresh_name(x, ctx.names())
            body = _gen_body(ctx.bind(y, dom), subst_term(cod, Var(y), x), rng, sig)
            return None if body is None else _recast(Lam(y, dom, body), base, ty)
        case Forall(a, body):
            b = fresh_name(a, ctx.names())
            inner = _gen_body(ctx.bind_type(b), subst_type(body, TVar(b), a), rng, sig)
            return None if inner is None else _recast(TLam(b, inner), base, ty)
    return None


def _recast(v, base: Type, ty: Type):
    return v if base == ty else App(Cast(base, ty, GEN_LABEL), v)


@dataclass
class ClosingSubst:
    """Maps term variables to closed values and type variables to closed types."""

    terms: dict = field(default_factory=dict)
    types: dict = field(default_factory=dict)

    def apply(self, node):
        return subst(node, self.terms, self.types)

    def show(self) -> str:
        parts = [f"{a} := {t}" for a, t in self.types.items()]
        parts += [f"{x} := {v}" for x, v in self.terms.items()]
        return "[" + ", ".join(parts) + "]"

    def __bool__(self) -> bool:
        return bool(self.terms or self.types)


def gen_closing_subst(ctx: Context, rng: random.Random, sig: Signature = sigmod.DEFAULT, tries: int = 5) -> ClosingSubst | None:
    """Generate-and-filter a substitution respecting ``ctx``: each value
    satisfies its (already substituted) type, checked with the evaluator."""
    for _ in range(tries):
        sigma = ClosingSubst()
        ok = True
        for entry in ctx:
            if isinstance(entry, TyBind):
                sigma.types[entry.name] = rng.choice([INT, BOOL])
                continue
            ty = sigma.apply(entry.ty)
            v = gen_value(ty, rng, sig)
            if v is None:
                ok = False
                break
            sigma.terms[entry.name] = v
        if ok:
            return sigma
    return None


# ---------------------------------------------------------------- terms


class TermGen:
    """Type-directed generator of terms of a requested type."""

    def __init__(self, rng: random.Random, sig: Signature = sigmod.DEFAULT, labels=LABELS, blame: bool = True):
        self.rng = rng
        self.sig = sig
        self.labels = labels
        self.blame = blame
        self.counter = 0

    def label(self) -> str:
        return self.rng.choice(self.labels)

    def fresh(self, base: str, ctx: Context, avoid=()) -> str:
        self.counter += 1
        return fresh_name(f"{base}{self.counter}", ctx.names() | set(avoid))

    def scope(self, ctx: Context) -> dict:
        return {b.name: b.ty for b in ctx.term_binds() if isinstance(unref(b.ty), Base)}

    def vars_of(self, ctx: Context, ty: Type):
        exact, compat = [], []
        for b in ctx.term_binds():
            if b.ty == ty:
                exact.append(Var(b.name))
            elif compatible(b.ty, ty) and not (free_vars(b.ty)[0] & {b.name}):
                compat.append(App(Cast(b.ty, ty, self.label()), Var(b.name)))
        return exact, compat

    # -- entry point

    def term(self, ctx: Context, ty: Type, size: int):
        rng = self.rng
        exact, compat = self.vars_of(ctx, ty)
        if exact and rng.random() < (0.5 if size <= 2 else 0.15):
            return rng.choice(exact)
        if size > 2:
            r = rng.random()
            if r < 0.12:
                return self.let(ctx, ty, size)
            if r < 0.22:
                return self.cast_app(ctx, ty, size)
            if r < 0.28 and compat:
                return rng.choice(compat)
        match ty:
            case Refine():
                return self.refined(ctx, ty, size)
            case Base(name):
                return self.base(ctx, name, size)
            case TVar():
                return self.tvar(ctx, ty, size)
            case Fun(x, dom, cod):
                return self.lam(ctx, x, dom, cod, size)
            case Forall(a, body):
                b = a if a not in ctx.names() else self.fresh(a, ctx)
                inner = subst_type(body, TVar(b), a) if b != a else body
                return TLam(b, self.term(ctx.bind_type(b), inner, size - 1))
        raise ValueError(f"cannot generate at {ty}")

    def arg(self, ctx: Context, ty: Type, size: int):
        if self.blame and not ctx.term_binds() and self.rng.random() < 0.03:
            return Blame(self.label())
        return self.term(ctx, ty, size)

    def let(self, ctx: Context, ty: Type, size: int):
        bty = self.bound_type(ctx)
        y = self.fresh("y", ctx, free_vars(ty)[0])
        bound = self.term(ctx, bty, size // 2)
        body = self.term(ctx.bind(y, bty), ty, size - size // 2 - 1)
        return mk_let(y, bty, bound, body)

    def bound_type(self, ctx: Context) -> Type:
        rng = self.rng
        tv = ctx.tvars()
        if tv and rng.random() < 0.2:
            return TVar(rng.choice(tv))
        if rng.random() < 0.2:
            return gen_type(rng, 1, tuple(tv), self.scope(ctx), poly=False)
        base = gen_base(rng)
        return gen_refinement(base, rng, self.scope(ctx)) if rng.random() < 0.4 else base

    def cast_app(self, ctx: Context, ty: Type, size: int):
        src = vary_refinements(ty, self.rng, self.scope(ctx))
        if not compatible(src, ty) or (free_vars(src)[0] - ctx.names()):
            src = unref(ty) if isinstance(unref(ty), Base) else ty
        return App(Cast(src, ty, self.label()), self.arg(ctx, src, size - 1))

    def refined(self, ctx: Context, ty: Refine, size: int):
        rng = self.rng
        r = rng.random()
        closed_ctx = not ctx.term_binds()
        if closed_ctx and isinstance(ty.base, Base) and is_closed(ty) and r < 0.2:
            chk = self.active_check(ty)
            if chk is not None:
                return chk
        if r < 0.45 and not (free_vars(ty.base)[0] - ctx.names()):
            return WaitCheck(ty, self.term(ctx, ty.base, size - 1), self.label())
        if size <= 1 and isinstance(unref(ty), Base):
            base = unref(ty)
            return App(Cast(base, ty, self.label()), self.const(base.name))
        return self.cast_app(ctx, ty, max(size, 3))

    def active_check(self, ty: Refine):
        k = self.const(ty.base.name)
        states = trace(subst_term(ty.pred, k, ty.var), 200, self.sig)
        states = [s for s in states if not isinstance(s, Blame)]
        if not states:
            return None
        return ActiveCheck(ty, self.rng.choice(states), k, self.label())

    def const(self, base: str) -> Const:
        if base == "Bool":
            return Const(self.rng.random() < 0.5)
        return Const(self.rng.choice([0, 1, 2, 3, 4, 5, 7, -1, -3, 10]))

    def base(self, ctx: Context, name: str, size: int):
        rng = self.rng
        if size <= 1:
            exact, compat = self.vars_of(ctx, Base(name))
            pool = exact + compat
            if pool and rng.random() < 0.5:
                return rng.choice(pool)
            return self.const(name)
        r = rng.random()
        if r < 0.45:
            ops = [n for n in self.sig.names() if self._plain_op(n, name)]
            op = self.sig[rng.choice(ops)]
            share = max(1, (size - 1) // max(op.arity, 1))
            return Op(op.name, tuple(self.arg(ctx, p, share) for _, p in op.params))
        if r < 0.6:
            return self.poly_app(ctx, Base(name), size)
        if r < 0.8:
            dom = self.bound_type(ctx)
            x = self.fresh("x", ctx)
            fn = self.term(ctx, Fun(x, dom, Base(name)), size // 2)
            return App(fn, self.arg(ctx, dom, size - size // 2 - 1))
        return self.term(ctx, Base(name), 1)

    def _plain_op(self, name: str, result: str) -> bool:
        op = self.sig[name]
        return (
            op.result == Base(result)
            and op.arity > 0
            and all(isinstance(p, Base) for _, p in op.params)
        )

    def poly_app(self, ctx: Context, ty: Type, size: int):
        """``(tyfun (a) fun (x:a) x) [T] e`` and cast-wrapped variants."""
        a = self.fresh("a", ctx)
        x = self.fresh("x", ctx)
        poly = TLam(a, identity(TVar(a), x))
        pty = Forall(a, Fun(x, TVar(a), TVar(a)))
        if self.rng.random() < 0.4:
            poly = App(Cast(pty, pty, self.label()), poly)
        return App(TApp(poly, ty), self.arg(ctx, ty, size - 1))

    def tvar(self, ctx: Context, ty: TVar, size: int):
        exact, _ = self.vars_of(ctx, ty)
        if exact and (size <= 2 or self.rng.random() < 0.5):
            v = self.rng.choice(exact)
            if self.rng.random() < 0.3:
                return App(Cast(ty, ty, self.label()), v)
            return v
        # no value of an abstract type in scope: go through a function
        x = self.fresh("x", ctx)
        fn = self.term(ctx, Fun(x, INT, ty), size // 2) if exact else None
        if fn is None:
            raise _NoTerm(ty)
        return App(fn, self.arg(ctx, INT, max(1, size // 2)))

    def lam(self, ctx: Context, x: str, dom: Type, cod: Type, size: int):
        ty = Fun(x, dom, cod)
        if size > 2 and self.rng.random() < 0.25:
            src = vary_refinements(ty, self.rng, self.scope(ctx))
            if compatible(src, ty) and not (free_vars(src)[0] - ctx.names()):
                return App(Cast(src, ty, self.label()), self.term(ctx, src, size - 1))
        y = x if x not in ctx.names() else self.fresh(x, ctx)
        cod2 = subst_term(cod, Var(y), x) if y != x else cod
        return Lam(y, dom, self.term(ctx.bind(y, dom), cod2, size - 1))


class _NoTerm(Exception):
    pass


def gen_term(ctx: Context, ty: Type, size: int, rng: random.Random, sig: Signature = sigmod.DEFAULT, blame: bool = True):
    """A term of type ``ty`` under ``ctx``, or ``None`` if generation failed."""
    try:
        return TermGen(rng, sig, blame=blame).term(ctx, ty, size)
    except (_NoTerm, RecursionError, ValueError):
        return None


def gen_typed_term(rng: random.Random, size: int = 8, sig: Signature = sigmod.DEFAULT, ctx: Context = EMPTY, depth: int = 2, tries: int = 20):
    """A ``(term, type)`` pair whose term typechecks at that type, or ``None``."""
    from .typesystem import FhTypeError, typecheck

    for _ in range(tries):
        ty = gen_type(rng, depth, tuple(ctx.tvars()))
        e = gen_term(ctx, ty, size, rng, sig)
        if e is None:
            continue
        try:
            got = typecheck(ctx, e, sig)
        except FhTypeError:
            continue
        return e, got
    return None


# ---------------------------------------------------------------- static evaluation contexts


def gen_static_context(hole: Type, rng: random.Random, size: int = 4, sig: Signature = sigmod.DEFAULT):
    """A static evaluation context (application, type application and
    operation frames only) for a closed hole type. Returns the frame tuple
    and the type of the plugged term."""
    frames: list = []
    ty = hole
    gen = TermGen(rng, sig, blame=False)
    budget = size
    while budget > 0:
        base = unref(ty)
        if isinstance(ty, Refine) and not isinstance(base, Base):
            # applying a refined function needs its refinement cast away first
            frames.append(AppR(Cast(ty, base, rng.choice(LABELS))))
            ty = base
            continue
        match ty:
            case Fun(x, dom, cod):
                arg = gen_value(dom, rng, sig)
                if arg is None:
                    break
                frames.append(AppL(arg))
                ty = subst_term(cod, arg, x)
            case Forall(a, body):
                t = rng.choice([INT, BOOL])
                frames.append(TyAppFrame(t))
                ty = subst_type(body, t, a)
            case _:
                if rng.random() < 0.5 or not isinstance(base, Base):
                    break
                frame, ty = _observer(base.name, ty, rng, gen)
                frames.append(frame)
                budget -= 1
                continue
        budget -= 1
    # frames were collected innermost first
    return tuple(reversed(frames)), ty


def _observer(base: str, ty: Type, rng: random.Random, gen: TermGen):
    """A frame consuming a value of base type ``ty``."""
    r = rng.random()
    if ty != unref(ty) and r < 0.6:
        # operations take plain base types: forget the refinement first
        return AppR(Cast(ty, unref(ty), rng.choice(LABELS))), unref(ty)
    if base == "Int":
        k = Const(rng.choice([0, 1, 2, 3]))
        if r < 0.3:
            return OpFrame("add", (k,), ()), INT
        if r < 0.6:
            name = rng.choice(["eqInt", "lt", "ge"])
            return OpFrame(name, (), (k,)), BOOL
    else:
        if r < 0.3:
            return OpFrame("not", (), ()), BOOL
        if r < 0.5:
            return OpFrame("eqBool", (), (Const(rng.random() < 0.5),)), BOOL
    x = "h"
    res = gen_base(rng)
    try:
        body = gen.term(EMPTY.bind(x, ty), res, 3)
    except _NoTerm:
        body = gen.const(res.name)
    return AppR(Lam(x, ty, body)), res


def plug_context(frames, e):
    return plug(frames, e)


def show_context(frames) -> str:
    return str(plug(frames, Var("[]")))
