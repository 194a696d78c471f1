"""Algorithmic well-formedness, type compatibility, type conversion and type
synthesis.

There is no subsumption: every term synthesizes one type, and argument types
must be convertible to parameter types. Conversion is approximated by
normalizing the closed term positions inside both types under a step budget,
so a check can come back ``UNKNOWN``; that case is reported as
``ConversionUnknown`` instead of a definite mismatch.
"""

from __future__ import annotations

import enum
import itertools

from . import signature as sigmod
from .semantics import Blamed, FuelExhausted, Stuck, Value, evaluate, satisfies_refinements, trace
from .signature import Signature
from .syntax import (
    BOOL,
    EMPTY,
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
    Node,
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
    arrow,
    fresh_name,
    free_vars,
    is_closed,
    is_type,
    is_value,
    subst,
    subst_term,
    subst_type,
    unref,
)

CONV_BUDGET = 500
BASE_NAMES = ("Bool", "Int")


class Verdict(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


class FhTypeError(Exception):
    """A failed typing judgment. ``kind`` names the judgment that failed."""

    KINDS = (
        "UnboundVar",
        "UnboundTypeVar",
        "UnknownBaseType",
        "UnknownOp",
        "DuplicateBinding",
        "NotAFunction",
        "NotAForall",
        "ArgMismatch",
        "ArityMismatch",
        "IncompatibleCast",
        "IllFormedType",
        "NotBool",
        "ConversionUnknown",
        "RuntimeForm",
        "BlameNeedsType",
    )

    def __init__(self, kind: str, message: str, term: Node | None = None):
        assert kind in self.KINDS, kind
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
        self.term = term


# ---------------------------------------------------------------- compatibility


def compatible(t1: Type, t2: Type) -> bool:
    """Equality modulo refinements."""
    t1, t2 = unref(t1), unref(t2)
    match t1, t2:
        case Base(a), Base(b):
            return a == b
        case TVar(a), TVar(b):
            return a == b
        case Fun(_, d1, c1), Fun(_, d2, c2):
            return compatible(d1, d2) and compatible(c1, c2)
        case Forall(a1, b1), Forall(a2, b2):
            if a1 == a2:
                return compatible(b1, b2)
            fresh = fresh_name(a1, free_vars(b1)[1] | free_vars(b2)[1] | {a2})
            return compatible(subst_type(b1, TVar(fresh), a1), subst_type(b2, TVar(fresh), a2))
    return False


# ---------------------------------------------------------------- conversion


class _Normalizer:
    def __init__(self, sig: Signature, budget: int):
        self.sig = sig
        self.budget = budget
        self.exhausted = False

    def node(self, n: Node) -> Node:
        if is_type(n):
            return self.type_(n)
        return self.term(n)

    def type_(self, t: Type) -> Type:
        match t:
            case Fun(x, d, c):
                return Fun(x, self.type_(d), self.type_(c))
            case Forall(a, b):
                return Forall(a, self.type_(b))
            case Refine(x, b, p):
                return Refine(x, self.type_(b), self.term(p))
        return t

    def term(self, e):
        if is_closed(e) and not is_value(e) and not isinstance(e, Blame):
            out = evaluate(e, self.budget, self.sig)
            match out:
                case Value(v):
                    return self.inside(v)
                case Blamed(label):
                    return Blame(label)
                case Stuck(t):
                    return t
                case FuelExhausted(t):
                    self.exhausted = True
                    return t
        return self.inside(e)

    def inside(self, e):
        match e:
            case Lam(x, t, b):
                return Lam(x, self.type_(t), self.term(b))
            case TLam(a, b):
                return TLam(a, self.term(b))
            case App(f, a):
                return App(self.term(f), self.term(a))
            case TApp(f, t):
                return TApp(self.term(f), self.type_(t))
            case Cast(s, t, label):
                return Cast(self.type_(s), self.type_(t), label)
            case Op(name, args):
                return Op(name, tuple(self.term(a) for a in args))
            case WaitCheck(r, s, label):
                return WaitCheck(self.type_(r), self.term(s), label)
            case ActiveCheck(r, s, v, label):
                return ActiveCheck(self.type_(r), self.term(s), self.term(v), label)
        return e


def normalize(n: Node, sig: Signature = sigmod.DEFAULT, budget: int = CONV_BUDGET) -> tuple[Node, bool]:
    """Evaluate every maximal closed non-value term position. Returns the
    result and whether every evaluation finished within ``budget`` steps."""
    norm = _Normalizer(sig, budget)
    out = norm.node(n)
    return out, not norm.exhausted


def conv_equiv(t1: Type, t2: Type, sig: Signature = sigmod.DEFAULT, budget: int = CONV_BUDGET) -> Verdict:
    if alpha_eq(t1, t2):
        return Verdict.YES
    n1, ok1 = normalize(t1, sig, budget)
    n2, ok2 = normalize(t2, sig, budget)
    if alpha_eq(n1, n2):
        return Verdict.YES
    return Verdict.NO if ok1 and ok2 else Verdict.UNKNOWN


# ---------------------------------------------------------------- checker


class Checker:
    """Typing judgments over a fixed signature.

    ``runtime=True`` additionally admits the rules that only make sense for
    closed run-time terms: a closed value may take a refinement type it
    satisfies, and a refinement may be forgotten before application.
    """

    def __init__(self, sig: Signature = sigmod.DEFAULT, budget: int = CONV_BUDGET, runtime: bool = False):
        self.sig = sig
        self.budget = budget
        self.runtime = runtime

    # -- contexts and types

    def wf_context(self, ctx: Context) -> None:
        seen: set[str] = set()
        prefix = EMPTY
        for entry in ctx:
            if entry.name in seen:
                raise FhTypeError("DuplicateBinding", f"{entry.name} is bound twice")
            seen.add(entry.name)
            if isinstance(entry, TermBind):
                self.wf_type(prefix, entry.ty)
            prefix = Context(prefix.entries + (entry,))

    def wf_type(self, ctx: Context, ty: Type) -> None:
        match ty:
            case Base(name):
                if name not in BASE_NAMES:
                    raise FhTypeError("UnknownBaseType", f"unknown base type {name}", ty)
            case TVar(name):
                if not ctx.has_tvar(name):
                    raise FhTypeError("UnboundTypeVar", f"type variable {name} is not in scope", ty)
            case Fun(x, dom, cod):
                self.wf_type(ctx, dom)
                x, cod = _open_term_binder(ctx, x, cod)
                self.wf_type(ctx.bind(x, dom), cod)
            case Forall(a, body):
                a, body = _open_type_binder(ctx, a, body)
                self.wf_type(ctx.bind_type(a), body)
            case Refine(x, base, pred):
                self.wf_type(ctx, base)
                x, pred = _open_term_binder(ctx, x, pred)
                got = self.synth(ctx.bind(x, base), pred)
                v = conv_equiv(got, BOOL, self.sig, self.budget)
                if v is not Verdict.YES:
                    raise FhTypeError("NotBool", f"refinement has type {got}, not Bool", pred)
            case _:
                raise FhTypeError("IllFormedType", f"not a type: {ty!r}")

    # -- terms

    def synth(self, ctx: Context, e) -> Type:
        match e:
            case Const():
                return Base(e.base)
            case Var(name):
                ty = ctx.lookup(name)
                if ty is None:
                    raise FhTypeError("UnboundVar", f"variable {name} is not in scope", e)
                return ty
            case Lam(x, annot, body):
                self.wf_type(ctx, annot)
                x2, body = _open_term_binder(ctx, x, body)
                return Fun(x2, annot, self.synth(ctx.bind(x2, annot), body))
            case TLam(a, body):
                a2, body = _open_type_binder(ctx, a, body)
                return Forall(a2, self.synth(ctx.bind_type(a2), body))
            case App(fn, arg):
                fty = self.synth(ctx, fn)
                if self.runtime:
                    fty = unref(fty)
                if not isinstance(fty, Fun):
                    raise FhTypeError("NotAFunction", f"applying a term of type {fty}", e)
                self.check(ctx, arg, fty.dom)
                result = subst_term(fty.cod, arg, fty.var)
                try:
                    self.wf_type(ctx, result)
                except FhTypeError as err:
                    raise FhTypeError("IllFormedType", f"result type {result} is not well formed: {err}", e)
                return result
            case TApp(fn, ty):
                fty = self.synth(ctx, fn)
                if self.runtime:
                    fty = unref(fty)
                if not isinstance(fty, Forall):
                    raise FhTypeError("NotAForall", f"type application of a term of type {fty}", e)
                self.wf_type(ctx, ty)
                return subst_type(fty.body, ty, fty.tvar)
            case Cast(src, tgt, _):
                self.wf_type(ctx, src)
                self.wf_type(ctx, tgt)
                if not compatible(src, tgt):
                    raise FhTypeError("IncompatibleCast", f"{src} and {tgt} are not compatible", e)
                return arrow(src, tgt)
            case Op(name, args):
                if name not in self.sig:
                    raise FhTypeError("UnknownOp", f"unknown operation {name}", e)
                opsig = self.sig[name]
                if len(args) != opsig.arity:
                    raise FhTypeError("ArityMismatch", f"{name} takes {opsig.arity} arguments", e)
                bound: dict = {}
                for (var, pty), arg in zip(opsig.params, args):
                    self.check(ctx, arg, subst(pty, bound))
                    bound[var] = arg
                return subst(opsig.result, bound)
            case WaitCheck(ref, subject, _):
                self.wf_type(ctx, ref)
                self.check(ctx, subject, ref.base)
                return ref
            case ActiveCheck(ref, state, value, _):
                return self._active_check(ctx, e, ref, state, value)
            case Blame():
                raise FhTypeError("BlameNeedsType", "blame has every type; check it against one", e)
        raise FhTypeError("IllFormedType", f"not a term: {e!r}")

    def _active_check(self, ctx, e, ref, state, value) -> Type:
        if ctx.term_binds() or not is_closed(e):
            raise FhTypeError("RuntimeForm", "active checks are typed only when closed", e)
        self.wf_type(EMPTY, ref)
        if not is_value(value):
            raise FhTypeError("RuntimeForm", "the checked term of an active check must be a value", e)
        Checker(self.sig, self.budget, runtime=True).check(EMPTY, value, ref.base)
        self.check(EMPTY, state, BOOL)
        start = subst_term(ref.pred, value, ref.var)
        if not any(alpha_eq(s, state) for s in trace(start, self.budget, self.sig)):
            raise FhTypeError("RuntimeForm", "state is not reachable from the refinement", e)
        return ref

    def check(self, ctx: Context, e, ty: Type) -> None:
        """Check ``e`` against ``ty``: synthesize, then compare by conversion."""
        if isinstance(e, Blame):
            if ctx.term_binds():
                raise FhTypeError("RuntimeForm", "blame is typed only in the empty context", e)
            self.wf_type(ctx, ty)
            return
        got = self.synth(ctx, e)
        v = conv_equiv(got, ty, self.sig, self.budget)
        if v is Verdict.YES:
            return
        if self.runtime and self._exact(ctx, e, got, ty):
            return
        kind = "ArgMismatch" if v is Verdict.NO else "ConversionUnknown"
        raise FhTypeError(kind, f"{e} has type {got}, expected {ty}", e)

    def _exact(self, ctx: Context, e, got: Type, ty: Type) -> bool:
        # closed values may be given a refinement type they satisfy
        if not (isinstance(ty, Refine) and is_value(e) and is_closed(e)):
            return False
        try:
            self.check(ctx, e, ty.base)
        except FhTypeError:
            return False
        out = evaluate(subst_term(ty.pred, e, ty.var), self.budget, self.sig)
        return isinstance(out, Value) and out.term == Const(True)


def _open_term_binder(ctx: Context, x: str, body: Node) -> tuple[str, Node]:
    """Rename a binder that clashes with the context, keeping bound names distinct."""
    names = ctx.names()
    if x not in names:
        return x, body
    new = fresh_name(x, names | free_vars(body)[0])
    return new, subst_term(body, Var(new), x)


def _open_type_binder(ctx: Context, a: str, body: Node) -> tuple[str, Node]:
    names = ctx.names()
    if a not in names:
        return a, body
    new = fresh_name(a, names | free_vars(body)[1])
    return new, subst_type(body, TVar(new), a)


# ---------------------------------------------------------------- module-level API


def wf_context(ctx: Context, sig: Signature = sigmod.DEFAULT) -> None:
    Checker(sig).wf_context(ctx)


def wf_type(ctx: Context, ty: Type, sig: Signature = sigmod.DEFAULT) -> None:
    Checker(sig).wf_type(ctx, ty)


def typecheck(ctx: Context, e, sig: Signature = sigmod.DEFAULT, runtime: bool = False, budget: int = CONV_BUDGET) -> Type:
    return Checker(sig, budget, runtime).synth(ctx, e)


def check(ctx: Context, e, ty: Type, sig: Signature = sigmod.DEFAULT, runtime: bool = False) -> None:
    Checker(sig, runtime=runtime).check(ctx, e, ty)


def well_typed(ctx: Context, e, sig: Signature = sigmod.DEFAULT, runtime: bool = False) -> Type | None:
    try:
        return typecheck(ctx, e, sig, runtime)
    except FhTypeError:
        return None


# ---------------------------------------------------------------- signature validation

INT_TEST_RANGE = range(-20, 21)


def _constants(base: str, int_range) -> list[Const]:
    if base == "Bool":
        return [Const(False), Const(True)]
    return [Const(n) for n in int_range]


def validate_signature(
    sig: Signature = sigmod.DEFAULT,
    const_types: dict | None = None,
    int_range=INT_TEST_RANGE,
) -> list[str]:
    """Check the requirements on constants and operations over a finite grid
    of constants. Returns a list of violations; empty means everything passed."""
    report: list[str] = []
    for k, ty in (const_types or {}).items():
        base = unref(ty)
        if not isinstance(base, Base) or base.name != k.base:
            report.append(f"constant {k}: {ty} does not refine {k.base}")
            continue
        try:
            wf_type(EMPTY, ty, sig)
        except FhTypeError as err:
            report.append(f"constant {k}: {err}")
            continue
        out = evaluate(App(Cast(base, ty, "sig"), k), 1000, sig)
        if out != Value(k):
            report.append(f"constant {k} violates {ty}")
    for name in sig.names():
        opsig = sig[name]
        problem = sigmod.check_shape(opsig)
        if problem:
            report.append(problem)
            continue
        grids = [_constants(unref(p).name, int_range) for _, p in opsig.params]
        for args in itertools.product(*grids):
            bound: dict = {}
            admissible = True
            for (var, pty), k in zip(opsig.params, args):
                if not satisfies_refinements(subst(pty, bound), k, sig):
                    admissible = False
                    break
                bound[var] = k
            if not admissible:
                continue
            try:
                raw = opsig.impl(*(k.value for k in args))
            except Exception as err:  # denotation must be total on admissible inputs
                report.append(f"{name}{tuple(k.value for k in args)} raised {err!r}")
                continue
            result = Const(raw)
            want = unref(opsig.result)
            if result.base != want.name:
                report.append(f"{name}{tuple(k.value for k in args)} = {raw} is not a {want.name}")
            elif not satisfies_refinements(subst(opsig.result, bound), result, sig):
                report.append(f"{name}{tuple(k.value for k in args)} = {raw} violates {opsig.result}")
    return report
