"""Cast optimizations: reflexive and upcast elimination, selfification-assisted
elimination, static cast decomposition and source-refinement forgetting.

Every rewrite is logged with the site path, the rule, and its justification
(a ``Yes`` subtyping verdict or the name of a decomposition law). Casts whose
verdict is ``Unknown`` are left alone and recorded as skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import signature as sigmod
from .signature import EQUALITY, Signature
from .subtyping import (
    DEFAULT_CONFIG,
    SELF_LABEL,
    ProverConfig,
    Unknown,
    Verdict,
    Yes,
    explain,
    subtype,
)
from .syntax import (
    TYPE_CLASSES,
    children,
    ActiveCheck,
    App,
    Base,
    Cast,
    Context,
    Forall,
    Fun,
    Lam,
    Op,
    Refine,
    TApp,
    TLam,
    TVar,
    Type,
    Var,
    WaitCheck,
    all_names,
    alpha_eq,
    free_vars,
    fresh_name,
    identity,
    is_value,
    mk_let,
    subst_term,
    subst_type,
    unref,
)
from .typesystem import FhTypeError, Verdict as Conv, conv_equiv, typecheck

RULES = ("UpcastElim", "ReflElim", "DecompFun", "DecompForall", "DecompPrecheck", "ForgetSource", "SelfAssist", "BetaCleanup")
PASSES = ("decompose", "reflexive", "upcast", "self", "forget", "beta")
MAX_ROUNDS = 5


# ---------------------------------------------------------------- selfification


def selfify(ty: Type, e, sig: Signature = sigmod.DEFAULT) -> Type:
    """Strengthen ``ty`` so that its refinements pin values down to ``e``."""
    tm, tv = free_vars(e)
    match ty:
        case Base(name):
            x = fresh_name("x", tm)
            return Refine(x, ty, Op(EQUALITY[name], (Var(x), e)))
        case TVar():
            return ty
        case Fun(x, dom, cod):
            if x in tm:
                new = fresh_name(x, tm | free_vars(cod)[0])
                cod, x = subst_term(cod, Var(new), x), new
            return Fun(x, dom, selfify(cod, App(e, Var(x)), sig))
        case Forall(a, body):
            if a in tv:
                new = fresh_name(a, tv | free_vars(body)[1])
                body, a = subst_type(body, TVar(new), a), new
            return Forall(a, selfify(body, TApp(e, TVar(a)), sig))
        case Refine(x, inner, pred):
            strong = selfify(inner, App(Cast(ty, inner, SELF_LABEL), e), sig)
            # the outer binder must not capture anything the cast annotations mention
            v = fresh_name(x, tm | free_vars(strong)[0] | free_vars(inner)[0] | free_vars(pred)[0] - {x})
            body = mk_let(x, inner, App(Cast(strong, inner, SELF_LABEL), Var(v)), pred)
            return Refine(v, strong, body)
    raise TypeError(f"not a type: {ty!r}")


# ---------------------------------------------------------------- paths


def child_at(e, i: int):
    match e:
        case Lam(body=b) | TLam(body=b):
            return b
        case App(fn, arg):
            return (fn, arg)[i]
        case TApp(fn=fn):
            return fn
        case Op(args=args):
            return args[i]
        case WaitCheck(subject=s):
            return s
        case ActiveCheck(state=s, value=v):
            return (s, v)[i]
    raise IndexError(i)


def replace_child(e, i: int, new):
    match e:
        case Lam(x, t, _):
            return Lam(x, t, new)
        case TLam(a, _):
            return TLam(a, new)
        case App(fn, arg):
            return App(new, arg) if i == 0 else App(fn, new)
        case TApp(_, t):
            return TApp(new, t)
        case Op(name, args):
            return Op(name, args[:i] + (new,) + args[i + 1:])
        case WaitCheck(r, _, label):
            return WaitCheck(r, new, label)
        case ActiveCheck(r, s, v, label):
            return ActiveCheck(r, new, v, label) if i == 0 else ActiveCheck(r, s, new, label)
    raise IndexError(i)


def get_at(e, path: tuple):
    for i in path:
        e = child_at(e, i)
    return e


def set_at(e, path: tuple, new):
    if not path:
        return new
    return replace_child(e, path[0], set_at(child_at(e, path[0]), path[1:], new))


def uniquify_binders(e, avoid=frozenset()):
    """Rename term and type binders of terms so that no two coincide and none
    clashes with ``avoid``. Deterministic."""
    used = set(avoid) | free_vars(e)[0] | free_vars(e)[1]

    def go(e):
        match e:
            case Lam(x, t, b):
                new = x if x not in used else fresh_name(x, used | all_names(b))
                used.add(new)
                b = subst_term(b, Var(new), x) if new != x else b
                return Lam(new, t, go(b))
            case TLam(a, b):
                new = a if a not in used else fresh_name(a, used | all_names(b))
                used.add(new)
                b = subst_type(b, TVar(new), a) if new != a else b
                return TLam(new, go(b))
            case App(f, a):
                return App(go(f), go(a))
            case TApp(f, t):
                return TApp(go(f), t)
            case Op(name, args):
                return Op(name, tuple(go(a) for a in args))
            case WaitCheck(r, s, label):
                return WaitCheck(r, go(s), label)
        return e

    return go(e)


# ---------------------------------------------------------------- log


@dataclass(frozen=True)
class LogEntry:
    path: tuple
    rule: str
    justification: str
    before: object
    after: object
    verdict: Verdict | None = None  # None for law-justified rewrites
    semityped: bool = False

    def line(self) -> str:
        where = "/".join(map(str, self.path)) or "."
        just = self.justification.splitlines()[0]
        flag = " [semityped]" if self.semityped else ""
        return f"{where}\t{self.rule}{flag}\t{just}\t{self.before}  ==>  {self.after}"


@dataclass
class RewriteLog:
    input: object = None
    entries: list = field(default_factory=list)
    skipped: list = field(default_factory=list)  # (path, rule, reason)

    def replay(self, start=None):
        e = self.input if start is None else start
        for ent in self.entries:
            here = get_at(e, ent.path)
            if not alpha_eq(here, ent.before):
                raise ValueError(f"log does not replay at {ent.path}: found {here}")
            e = set_at(e, ent.path, ent.after)
        return e

    def skip(self, path: tuple, rule: str, reason: str) -> None:
        if (path, rule, reason) not in self.skipped:
            self.skipped.append((path, rule, reason))

    def report(self) -> str:
        lines = [ent.line() for ent in self.entries]
        lines += [f"{'/'.join(map(str, p)) or '.'}\tskipped {rule}\t{reason}" for p, rule, reason in self.skipped]
        return "\n".join(lines)

    def rules(self) -> list[str]:
        return [ent.rule for ent in self.entries]


# ---------------------------------------------------------------- decomposition laws


def decompose_cast(cast: Cast, avoid=frozenset()):
    """Apply the matching static decomposition law to a cast value, or
    return ``None`` when no law matches."""
    src, tgt, label = cast.src, cast.tgt, cast.label
    outer = set(avoid)
    avoid = outer | all_names(src) | all_names(tgt)
    match src, tgt:
        case Fun(x1, t11, t12), Fun(x2, t21, t22):
            z = fresh_name("z", avoid)
            x = x2 if not (x2.startswith("_") or x2 in outer) else fresh_name("x", avoid | {z})
            if x != x2:
                t22 = subst_term(t22, Var(x), x2)
            y = fresh_name("y", avoid | {z, x})
            body = mk_let(y, t11, App(Cast(t21, t11, label), Var(x)), App(Cast(subst_term(t12, Var(y), x1), t22, label), App(Var(z), Var(y))))
            return Lam(z, src, Lam(x, t21, body))
        case Forall(a1, t1), Forall(a2, t2):
            x = fresh_name("x", avoid)
            a = fresh_name(a1, avoid) if a1 in outer else a1
            b1 = subst_type(t1, TVar(a), a1) if a != a1 else t1
            b2 = subst_type(t2, TVar(a), a2) if a != a2 else t2
            return Lam(x, src, TLam(a, App(Cast(b1, b2, label), TApp(Var(x), TVar(a)))))
    if isinstance(tgt, Refine):
        y = fresh_name("y", avoid)
        return Lam(y, src, WaitCheck(tgt, App(Cast(src, tgt.base, label), Var(y)), label))
    return None


def _law(src: Type, tgt: Type) -> str | None:
    match src, tgt:
        case Fun(), Fun():
            return "DecompFun"
        case Forall(), Forall():
            return "DecompForall"
    if isinstance(tgt, Refine):
        return "DecompPrecheck"
    return None


_LAW_NAMES = {"DecompFun": "fh-cc-fun", "DecompForall": "fh-cc-forall", "DecompPrecheck": "fh-cc-precheck"}


# ---------------------------------------------------------------- driver


@dataclass(frozen=True)
class _Scope:
    typ: Context  # what the type checker sees
    prv: Context  # what the prover sees: let-bound variables carry selfified types

    def bind(self, x: str, ty: Type, prover_ty: Type | None = None) -> "_Scope":
        return _Scope(self.typ.bind(x, ty), self.prv.bind(x, prover_ty or ty))

    def bind_type(self, a: str) -> "_Scope":
        return _Scope(self.typ.bind_type(a), self.prv.bind_type(a))


@dataclass
class _Rewrite:
    replacement: object
    rule: str
    justification: str
    verdict: Verdict | None = None
    semityped: bool = False


class Optimizer:
    def __init__(self, sig: Signature = sigmod.DEFAULT, cfg: ProverConfig = DEFAULT_CONFIG):
        self.sig = sig
        self.cfg = cfg
        self._cache: dict = {}
        self.log = RewriteLog()

    # -- prover access

    def subtype(self, ctx: Context, t1: Type, t2: Type) -> Verdict:
        key = (ctx, t1, t2)
        if key not in self._cache:
            self._cache[key] = subtype(ctx, t1, t2, self.sig, self.cfg)
        return self._cache[key]

    def eliminable(self, ctx: Context, t1: Type, t2: Type) -> bool:
        return alpha_eq(t1, t2) or isinstance(self.subtype(ctx, t1, t2), Yes)

    # -- traversal

    def run_pass(self, name: str, scope: _Scope, e, forget: bool = True):
        site = {
            "reflexive": self._reflexive,
            "upcast": self._upcast,
            "decompose": self._decompose,
            "self": self._self_assist,
            "forget": self._forget if forget else None,
            "beta": self._beta,
        }[name]
        if site is None:
            return e
        return self._walk(e, scope, (), site)

    def _walk(self, e, scope: _Scope, path: tuple, site):
        match e:
            case Lam(x, t, b):
                e = Lam(x, t, self._walk(b, scope.bind(x, t), path + (0,), site))
            case TLam(a, b):
                e = TLam(a, self._walk(b, scope.bind_type(a), path + (0,), site))
            case App(Lam(x, t, b), arg):
                arg = self._walk(arg, scope, path + (1,), site)
                inner = scope.bind(x, t, selfify(t, arg, self.sig))
                e = App(Lam(x, t, self._walk(b, inner, path + (0, 0), site)), arg)
            case App(Cast() as c, arg):
                e = App(c, self._walk(arg, scope, path + (1,), site))
            case App(fn, arg):
                fn = self._walk(fn, scope, path + (0,), site)
                e = App(fn, self._walk(arg, scope, path + (1,), site))
            case TApp(fn, t):
                e = TApp(self._walk(fn, scope, path + (0,), site), t)
            case Op(name, args):
                e = Op(name, tuple(self._walk(a, scope, path + (i,), site) for i, a in enumerate(args)))
            case WaitCheck(r, s, label):
                e = WaitCheck(r, self._walk(s, scope, path + (0,), site), label)
        rw = site(e, scope, path)
        if rw is None:
            return e
        self.log.entries.append(LogEntry(path, rw.rule, rw.justification, e, rw.replacement, rw.verdict, rw.semityped))
        return rw.replacement

    # -- sites

    @staticmethod
    def _split(e):
        """(cast, argument-or-None) for a cast site, else None."""
        match e:
            case Cast():
                return e, None
            case App(Cast() as c, arg):
                return c, arg
        return None

    def _apply(self, rw: _Rewrite | None, arg):
        """Lift a rewrite of a cast value to the site that applies it."""
        if rw is None or arg is None:
            return rw
        r = rw.replacement
        if isinstance(r, Lam) and r.body == Var(r.var):
            rw.replacement = arg  # identity applied: contract
        else:
            rw.replacement = App(r, arg)
        return rw

    def _typed(self, scope: _Scope, cast: Cast, new, path, rule: str) -> bool:
        """The typed rewrites must give the cast value a convertible type."""
        try:
            before = typecheck(scope.typ, cast, self.sig)
            after = typecheck(scope.typ, new, self.sig)
        except FhTypeError as err:
            self.log.skip(path, rule, f"does not re-typecheck: {err}")
            return False
        if conv_equiv(before, after, self.sig) is not Conv.YES:
            self.log.skip(path, rule, f"type changed from {before} to {after}")
            return False
        return True

    def _identity_var(self, scope: _Scope, ty: Type) -> str:
        return fresh_name("x", scope.typ.names() | free_vars(ty)[0])

    def reflexive_rewrite(self, scope: _Scope, cast: Cast, path=()) -> _Rewrite | None:
        if not alpha_eq(cast.src, cast.tgt):
            return None
        new = identity(cast.src, self._identity_var(scope, cast.src))
        if not self._typed(scope, cast, new, path, "ReflElim"):
            return None
        return _Rewrite(new, "ReflElim", "fh-cc-refl")

    def upcast_rewrite(self, scope: _Scope, cast: Cast, path=()) -> _Rewrite | None:
        v = self.subtype(scope.prv, cast.src, cast.tgt)
        if not isinstance(v, Yes):
            self.log.skip(path, "UpcastElim", v.reason)
            return None
        new = identity(cast.src, self._identity_var(scope, cast.src))
        return _Rewrite(new, "UpcastElim", explain(v), v, semityped=True)

    def decompose_rewrite(self, scope: _Scope, cast: Cast, path=()) -> _Rewrite | None:
        law = _law(cast.src, cast.tgt)
        if law is None or alpha_eq(cast.src, cast.tgt):
            return None
        if law == "DecompPrecheck" and isinstance(unref(cast.tgt), Base):
            return None  # nothing to expose for first-order targets
        if isinstance(self.subtype(scope.prv, cast.src, cast.tgt), Yes):
            return None
        new = decompose_cast(cast, scope.typ.names())
        if not self._component_eliminable(scope, new, law):
            return None
        if not self._typed(scope, cast, new, path, law):
            return None
        return _Rewrite(new, law, _LAW_NAMES[law])

    def _component_eliminable(self, scope: _Scope, wrapper: Lam, law: str) -> bool:
        match law:
            case "DecompFun":
                z, inner = wrapper.var, wrapper.body
                x, let = inner.var, inner.body
                y, t11, body = let.fn.var, let.fn.annot, let.fn.body
                dom = let.arg.fn
                cod = body.fn
                s = scope.bind(z, wrapper.annot).bind(x, inner.annot)
                if self.eliminable(s.prv, dom.src, dom.tgt):
                    return True
                s = s.bind(y, t11, selfify(t11, let.arg, self.sig))
                return self.eliminable(s.prv, cod.src, cod.tgt)
            case "DecompForall":
                c = wrapper.body.body.fn
                s = scope.bind(wrapper.var, wrapper.annot).bind_type(wrapper.body.tvar)
                return self.eliminable(s.prv, c.src, c.tgt)
            case "DecompPrecheck":
                c = wrapper.body.subject.fn
                s = scope.bind(wrapper.var, wrapper.annot)
                return self.eliminable(s.prv, c.src, c.tgt)
        return False

    def _reflexive(self, e, scope, path):
        split = self._split(e)
        return split and self._apply(self.reflexive_rewrite(scope, split[0], path), split[1])

    def _upcast(self, e, scope, path):
        split = self._split(e)
        return split and self._apply(self.upcast_rewrite(scope, split[0], path), split[1])

    def _decompose(self, e, scope, path):
        split = self._split(e)
        return split and self._apply(self.decompose_rewrite(scope, split[0], path), split[1])

    def _self_assist(self, e, scope, path):
        split = self._split(e)
        if not split or split[1] is None:
            return None
        cast, arg = split
        if alpha_eq(cast.src, cast.tgt):
            return None
        if not (isinstance(arg, Var) or is_value(arg)):
            self.log.skip(path, "SelfAssist", f"argument {arg} is not a value or variable")
            return None
        if isinstance(self.subtype(scope.prv, cast.src, cast.tgt), Yes):
            return None
        strong = selfify(cast.src, arg, self.sig)
        v = self.subtype(scope.prv, strong, cast.tgt)
        if isinstance(v, Unknown):
            self.log.skip(path, "SelfAssist", v.reason)
        if not isinstance(v, Yes):
            return None
        just = f"fh-self-elim then upcast {strong} <: {cast.tgt}\n" + explain(v)
        return _Rewrite(arg, "SelfAssist", just, v, semityped=True)

    def _forget(self, e, scope, path, skip_upcasts=True):
        split = self._split(e)
        if not split:
            return None
        cast, arg = split
        if not isinstance(cast.src, Refine) or alpha_eq(cast.src, cast.tgt):
            return None
        # within a pass, whole upcasts are left to upcast elimination
        if skip_upcasts and isinstance(self.subtype(scope.prv, cast.src, cast.tgt), Yes):
            return None
        residual = Cast(cast.src.base, cast.tgt, cast.label)
        rw = (
            self.reflexive_rewrite(scope, residual, path)
            or self.upcast_rewrite(scope, residual, path)
            or self.decompose_rewrite(scope, residual, path)
        )
        if rw is None:
            return None
        rw = _Rewrite(rw.replacement, "ForgetSource", f"fh-cc-forget, residual {residual} by {rw.rule}", rw.verdict, True)
        return self._apply(rw, arg)

    def _beta(self, e, scope, path):
        match e:
            case App(Lam(x, _, Var(y)), arg) if x == y:
                return _Rewrite(arg, "BetaCleanup", "identity application")
        return None


def _scope(ctx: Context, sig: Signature) -> _Scope:
    return _Scope(ctx, ctx)


def _single(name: str, ctx: Context, e, sig: Signature, cfg: ProverConfig):
    opt = Optimizer(sig, cfg)
    e = uniquify_binders(e, ctx.names())
    opt.log.input = e
    out = opt.run_pass(name, _scope(ctx, sig), e)
    return out, opt.log


def eliminate_upcasts(ctx: Context, e, sig: Signature = sigmod.DEFAULT, cfg: ProverConfig = DEFAULT_CONFIG):
    return _single("upcast", ctx, e, sig, cfg)


def eliminate_reflexive_casts(ctx: Context, e, sig: Signature = sigmod.DEFAULT):
    return _single("reflexive", ctx, e, sig, DEFAULT_CONFIG)


def self_assisted_elimination(ctx: Context, e, sig: Signature = sigmod.DEFAULT, cfg: ProverConfig = DEFAULT_CONFIG):
    return _single("self", ctx, e, sig, cfg)


def forget_source_refinement(ctx: Context, cast: Cast, sig: Signature = sigmod.DEFAULT, cfg: ProverConfig = DEFAULT_CONFIG):
    """The optimized residual of a cast from a refinement type, or ``None``."""
    rw = Optimizer(sig, cfg)._forget(cast, _scope(ctx, sig), (), skip_upcasts=False)
    return None if rw is None else rw.replacement


def optimize(
    ctx: Context,
    e,
    passes=PASSES,
    sig: Signature = sigmod.DEFAULT,
    cfg: ProverConfig = DEFAULT_CONFIG,
    forget: bool = True,
    rounds: int = MAX_ROUNDS,
):
    """Run ``passes`` in order, repeatedly, until nothing changes."""
    unknown = set(passes) - set(PASSES)
    if unknown:
        raise ValueError(f"unknown passes: {', '.join(sorted(unknown))}")
    opt = Optimizer(sig, cfg)
    e = uniquify_binders(e, ctx.names())
    opt.log.input = e
    scope = _scope(ctx, sig)
    for _ in range(rounds):
        before = len(opt.log.entries)
        for name in [p for p in PASSES if p in passes]:
            e = opt.run_pass(name, scope, e, forget)
        if len(opt.log.entries) == before:
            break
    return e, opt.log


def count_casts(e) -> int:
    """Casts in term position; casts inside type annotations are not counted."""
    if isinstance(e, TYPE_CLASSES):
        return 0
    return isinstance(e, Cast) + sum(count_casts(c) for c in children(e))

