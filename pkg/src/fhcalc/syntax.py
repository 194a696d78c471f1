"""Abstract syntax of the calculus: types, terms, typing contexts and the
binding machinery (free variables, capture-avoiding substitution, alpha
equivalence).

Types and terms are mutually recursive: refinement types embed terms and
several term forms carry types. Every node is an immutable dataclass, so
nodes can be shared freely and used as dictionary keys.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

Label = str


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class Base:
    name: str  # "Bool" or "Int"


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class Fun:
    """Dependent function type ``(var:dom) -> cod``."""

    var: str
    dom: "Type"
    cod: "Type"


@dataclass(frozen=True)
class Forall:
    tvar: str
    body: "Type"


@dataclass(frozen=True)
class Refine:
    """Refinement type ``{var:base | pred}``."""

    var: str
    base: "Type"
    pred: "Term"


Type = Union[Base, TVar, Fun, Forall, Refine]

BOOL = Base("Bool")
INT = Base("Int")


# ---------------------------------------------------------------- terms


@dataclass(frozen=True, eq=False)
class Const:
    value: Union[bool, int]

    # bool is a subclass of int in Python, so True == 1 must be kept apart.
    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Const)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self) -> int:
        return hash((Const, type(self.value), self.value))

    @property
    def base(self) -> str:
        return "Bool" if isinstance(self.value, bool) else "Int"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    var: str
    annot: Type
    body: "Term"


@dataclass(frozen=True)
class TLam:
    tvar: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class TApp:
    fn: "Term"
    ty: Type


@dataclass(frozen=True)
class Cast:
    src: Type
    tgt: Type
    label: Label


@dataclass(frozen=True)
class Op:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class WaitCheck:
    ref: Refine
    subject: "Term"
    label: Label


@dataclass(frozen=True)
class ActiveCheck:
    ref: Refine
    state: "Term"
    value: "Term"
    label: Label


@dataclass(frozen=True)
class Blame:
    label: Label


Term = Union[Const, Var, Lam, TLam, App, TApp, Cast, Op, WaitCheck, ActiveCheck, Blame]
Node = Union[Type, Term]

TRUE = Const(True)
FALSE = Const(False)

TYPE_CLASSES = (Base, TVar, Fun, Forall, Refine)
TERM_CLASSES = (Const, Var, Lam, TLam, App, TApp, Cast, Op, WaitCheck, ActiveCheck, Blame)


def is_type(node: object) -> bool:
    return isinstance(node, TYPE_CLASSES)


def is_term(node: object) -> bool:
    return isinstance(node, TERM_CLASSES)


def mk_let(var: str, annot: Type, bound: Term, body: Term) -> Term:
    """``let var:annot = bound in body`` is sugar for ``(fun (var:annot) body) bound``."""
    return App(Lam(var, annot, body), bound)


def identity(annot: Type, var: str = "x") -> Lam:
    return Lam(var, annot, Var(var))


def arrow(dom: Type, cod: Type) -> Fun:
    """Non-dependent arrow; the binder is chosen so it cannot occur in ``cod``."""
    return Fun(fresh_name("_", free_vars(cod)[0]), dom, cod)


# ---------------------------------------------------------------- contexts


@dataclass(frozen=True)
class TermBind:
    name: str
    ty: Type


@dataclass(frozen=True)
class TyBind:
    name: str


@dataclass(frozen=True)
class Context:
    """Ordered typing context. Later entries may mention earlier ones."""

    entries: tuple = ()

    def bind(self, name: str, ty: Type) -> "Context":
        return Context(self.entries + (TermBind(name, ty),))

    def bind_type(self, name: str) -> "Context":
        return Context(self.entries + (TyBind(name),))

    def lookup(self, name: str) -> Type | None:
        for entry in reversed(self.entries):
            if isinstance(entry, TermBind) and entry.name == name:
                return entry.ty
        return None

    def has_tvar(self, name: str) -> bool:
        return any(isinstance(e, TyBind) and e.name == name for e in self.entries)

    def names(self) -> set[str]:
        return {e.name for e in self.entries}

    def term_binds(self) -> list[TermBind]:
        return [e for e in self.entries if isinstance(e, TermBind)]

    def tvars(self) -> list[str]:
        return [e.name for e in self.entries if isinstance(e, TyBind)]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


EMPTY = Context()


# ---------------------------------------------------------------- free variables


def _children(node: Node):
    """Yield (child, bound term vars, bound type vars) triples."""
    match node:
        case Base() | TVar() | Const() | Var() | Blame():
            return
        case Fun(var, dom, cod):
            yield dom, (), ()
            yield cod, (var,), ()
        case Forall(tvar, body):
            yield body, (), (tvar,)
        case Refine(var, base, pred):
            yield base, (), ()
            yield pred, (var,), ()
        case Lam(var, annot, body):
            yield annot, (), ()
            yield body, (var,), ()
        case TLam(tvar, body):
            yield body, (), (tvar,)
        case App(fn, arg):
            yield fn, (), ()
            yield arg, (), ()
        case TApp(fn, ty):
            yield fn, (), ()
            yield ty, (), ()
        case Cast(src, tgt, _):
            yield src, (), ()
            yield tgt, (), ()
        case Op(_, args):
            for a in args:
                yield a, (), ()
        case WaitCheck(ref, subject, _):
            yield ref, (), ()
            yield subject, (), ()
        case ActiveCheck(ref, state, value, _):
            yield ref, (), ()
            yield state, (), ()
            yield value, (), ()
        case _:
            raise TypeError(f"not a syntax node: {node!r}")


def free_vars(node: Node) -> tuple[frozenset, frozenset]:
    """Free term variables and free type variables of a type or term."""
    cached = node.__dict__.get("_fv")
    if cached is not None:
        return cached
    match node:
        case Var(name):
            result = (frozenset((name,)), frozenset())
        case TVar(name):
            result = (frozenset(), frozenset((name,)))
        case _:
            tm: set = set()
            ty: set = set()
            for child, bt, bty in _children(node):
                ctm, cty = free_vars(child)
                tm |= ctm - set(bt)
                ty |= cty - set(bty)
            result = (frozenset(tm), frozenset(ty))
    object.__setattr__(node, "_fv", result)
    return result


def is_closed(node: Node) -> bool:
    tm, ty = free_vars(node)
    return not tm and not ty


def all_names(node: Node) -> set[str]:
    """Every variable name occurring in the node, bound or free."""
    out: set[str] = set()

    def walk(n: Node) -> None:
        match n:
            case Var(name) | TVar(name):
                out.add(name)
            case Fun(var=v) | Refine(var=v) | Lam(var=v):
                out.add(v)
            case Forall(tvar=a) | TLam(tvar=a):
                out.add(a)
        for child, _, _ in _children(n):
            walk(child)

    walk(node)
    return out


_SUFFIX = re.compile(r"^(.*?)(\d+)$")


def fresh_name(base: str, avoid: Iterable[str], start: int = 1) -> str:
    """``base`` if unused, otherwise ``base`` (digits stripped) plus the first
    counter value that avoids every name in ``avoid``."""
    avoid = set(avoid)
    if base not in avoid:
        return base
    m = _SUFFIX.match(base)
    stem = m.group(1) if m and m.group(1) else base
    n = start
    while f"{stem}{n}" in avoid:
        n += 1
    return f"{stem}{n}"


# ---------------------------------------------------------------- substitution


class _Substitution:
    """One simultaneous substitution call. Renamed binders draw their suffix
    from a counter scoped to this call, so results are deterministic."""

    def __init__(self, terms: Mapping[str, Term], types: Mapping[str, Type]):
        self.terms = dict(terms)
        self.types = dict(types)
        tm_free: set = set()
        ty_free: set = set()
        for v in self.terms.values():
            a, b = free_vars(v)
            tm_free |= a
            ty_free |= b
        for t in self.types.values():
            a, b = free_vars(t)
            tm_free |= a
            ty_free |= b
        self.tm_free = tm_free
        self.ty_free = ty_free
        self.counter = 0

    def _fresh(self, name: str, avoid: set) -> str:
        m = _SUFFIX.match(name)
        stem = m.group(1) if m and m.group(1) else name
        while True:
            self.counter += 1
            cand = f"{stem}{self.counter}"
            if cand not in avoid:
                return cand

    def _relevant(self, node: Node, terms: dict, types: dict) -> bool:
        tm, ty = free_vars(node)
        return any(k in tm for k in terms) or any(k in ty for k in types)

    def run(self, node: Node, terms: dict, types: dict) -> Node:
        if not (terms or types) or not self._relevant(node, terms, types):
            return node
        match node:
            case Var(name):
                return terms.get(name, node)
            case TVar(name):
                return types.get(name, node)
            case Fun(var, dom, cod):
                dom2 = self.run(dom, terms, types)
                var2, cod = self._under_term_binder(var, cod, terms, types)
                return Fun(var2, dom2, cod)
            case Refine(var, base, pred):
                base2 = self.run(base, terms, types)
                var2, pred = self._under_term_binder(var, pred, terms, types)
                return Refine(var2, base2, pred)
            case Lam(var, annot, body):
                annot2 = self.run(annot, terms, types)
                var2, body = self._under_term_binder(var, body, terms, types)
                return Lam(var2, annot2, body)
            case Forall(tvar, body):
                tvar2, body = self._under_type_binder(tvar, body, terms, types)
                return Forall(tvar2, body)
            case TLam(tvar, body):
                tvar2, body = self._under_type_binder(tvar, body, terms, types)
                return TLam(tvar2, body)
            case App(fn, arg):
                return App(self.run(fn, terms, types), self.run(arg, terms, types))
            case TApp(fn, ty):
                return TApp(self.run(fn, terms, types), self.run(ty, terms, types))
            case Cast(src, tgt, label):
                return Cast(self.run(src, terms, types), self.run(tgt, terms, types), label)
            case Op(name, args):
                return Op(name, tuple(self.run(a, terms, types) for a in args))
            case WaitCheck(ref, subject, label):
                return WaitCheck(self.run(ref, terms, types), self.run(subject, terms, types), label)
            case ActiveCheck(ref, state, value, label):
                return ActiveCheck(
                    self.run(ref, terms, types),
                    self.run(state, terms, types),
                    self.run(value, terms, types),
                    label,
                )
        return node

    def _under_term_binder(self, var, body, terms, types):
        terms = {k: v for k, v in terms.items() if k != var}
        if not (terms or types) or not self._relevant(body, terms, types):
            return var, body
        if var in self.tm_free:
            avoid = self.tm_free | free_vars(body)[0] | set(terms)
            new = self._fresh(var, avoid)
            body = _Substitution({var: Var(new)}, {}).run(body, {var: Var(new)}, {})
            var = new
        return var, self.run(body, terms, types)

    def _under_type_binder(self, tvar, body, terms, types):
        types = {k: v for k, v in types.items() if k != tvar}
        if not (terms or types) or not self._relevant(body, terms, types):
            return tvar, body
        if tvar in self.ty_free:
            avoid = self.ty_free | free_vars(body)[1] | set(types)
            new = self._fresh(tvar, avoid)
            body = _Substitution({}, {tvar: TVar(new)}).run(body, {}, {tvar: TVar(new)})
            tvar = new
        return tvar, self.run(body, terms, types)


def subst(node: Node, terms: Mapping[str, Term] | None = None, types: Mapping[str, Type] | None = None) -> Node:
    """Simultaneous capture-avoiding substitution of terms for term variables
    and types for type variables."""
    s = _Substitution(terms or {}, types or {})
    return s.run(node, dict(s.terms), dict(s.types))


def subst_term(node: Node, value: Term, var: str) -> Node:
    """``node[value/var]``."""
    return subst(node, {var: value})


def subst_type(node: Node, ty: Type, tvar: str) -> Node:
    """``node[ty/tvar]``."""
    return subst(node, types={tvar: ty})


def rename_bound(node: Node, old: str, new: str) -> Node:
    """Rename a free term variable; used to pick binder names."""
    return subst(node, {old: Var(new)})


# ---------------------------------------------------------------- alpha equivalence


def canonical(node: Node, env: dict | None = None, depth: int = 0):
    """A nameless, hashable rendering: bound variables become binder depths.
    Two nodes are alpha-equivalent exactly when their renderings are equal."""
    env = env or {}

    def go(n: Node, env: dict, depth: int):
        match n:
            case Base(name):
                return ("B", name)
            case TVar(name):
                return ("a", env[("ty", name)]) if ("ty", name) in env else ("A", name)
            case Var(name):
                return ("v", env[("tm", name)]) if ("tm", name) in env else ("V", name)
            case Const(value):
                return ("k", type(value).__name__, value)
            case Fun(var, dom, cod):
                return ("fun", go(dom, env, depth), go(cod, {**env, ("tm", var): depth}, depth + 1))
            case Refine(var, base, pred):
                return ("ref", go(base, env, depth), go(pred, {**env, ("tm", var): depth}, depth + 1))
            case Forall(tvar, body):
                return ("all", go(body, {**env, ("ty", tvar): depth}, depth + 1))
            case Lam(var, annot, body):
                return ("lam", go(annot, env, depth), go(body, {**env, ("tm", var): depth}, depth + 1))
            case TLam(tvar, body):
                return ("tlam", go(body, {**env, ("ty", tvar): depth}, depth + 1))
            case App(fn, arg):
                return ("app", go(fn, env, depth), go(arg, env, depth))
            case TApp(fn, ty):
                return ("tapp", go(fn, env, depth), go(ty, env, depth))
            case Cast(src, tgt, label):
                return ("cast", go(src, env, depth), go(tgt, env, depth), label)
            case Op(name, args):
                return ("op", name, tuple(go(a, env, depth) for a in args))
            case WaitCheck(ref, subject, label):
                return ("wait", go(ref, env, depth), go(subject, env, depth), label)
            case ActiveCheck(ref, state, value, label):
                return ("active", go(ref, env, depth), go(state, env, depth), go(value, env, depth), label)
            case Blame(label):
                return ("blame", label)
        raise TypeError(f"not a syntax node: {n!r}")

    return go(node, env, depth)


def alpha_eq(a: Node, b: Node) -> bool:
    if a is b:
        return True
    return canonical(a) == canonical(b)


# ---------------------------------------------------------------- refinement helpers


def unref(ty: Type) -> Type:
    """Strip refinements that are not under another type constructor."""
    while isinstance(ty, Refine):
        ty = ty.base
    return ty


def refines(ty: Type) -> list[Lam]:
    """The refinement predicates of the outer refinement layers as lambda
    abstractions, outermost first."""
    out = []
    while isinstance(ty, Refine):
        out.append(Lam(ty.var, ty.base, ty.pred))
        ty = ty.base
    return out


def is_value(e: Term) -> bool:
    return isinstance(e, (Const, Lam, TLam, Cast))


def size(node: Node) -> int:
    return 1 + sum(size(c) for c, _, _ in _children(node))


def term_size(e: Term) -> int:
    """Number of term constructors, not counting the insides of types."""
    match e:
        case Lam(body=body) | TLam(body=body):
            return 1 + term_size(body)
        case App(fn, arg):
            return 1 + term_size(fn) + term_size(arg)
        case TApp(fn=fn):
            return 1 + term_size(fn)
        case Op(args=args):
            return 1 + sum(term_size(a) for a in args)
        case WaitCheck(subject=s):
            return 1 + term_size(s)
        case ActiveCheck(state=s, value=v):
            return 1 + term_size(s) + term_size(v)
    return 1


def subterms(node: Node):
    """Pre-order walk over every node, types and terms alike."""
    yield node
    for child, _, _ in _children(node):
        yield from subterms(child)


def children(node: Node):
    return [c for c, _, _ in _children(node)]


def _str_node(self) -> str:
    from .printer import show

    return show(self)


for _cls in TYPE_CLASSES + TERM_CLASSES:
    _cls.__str__ = _str_node
del _cls
