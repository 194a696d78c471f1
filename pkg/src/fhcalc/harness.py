"""Differential testing: observable equivalence, CIU testing under closing
substitutions and static evaluation contexts, cotermination sampling, and
the property suites behind ``fh quickcheck``.

The harness can only refute equivalence. A clean report means no
distinguishing context was found within the trial budget.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Union

from . import signature as sigmod
from .generate import (
    LABELS,
    ClosingSubst,
    gen_closing_subst,
    gen_refinement,
    gen_static_context,
    gen_term,
    gen_type,
    gen_typed_term,
    show_context,
    vary_refinements,
)
from .optimizer import decompose_cast, selfify
from .semantics import (
    DEFAULT_FUEL,
    Blamed,
    FuelExhausted,
    Stuck,
    Value,
    evaluate,
    plug,
    show_outcome,
    step,
)
from .signature import Signature
from .subtyping import DEFAULT_CONFIG, ProverConfig, Yes, subtype
from .syntax import (
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
    Refine,
    Type,
    identity,
    is_value,
    refines,
    subst_term,
    subterms,
    unref,
    WaitCheck,
)
from .typesystem import FhTypeError, typecheck

DEFAULT_TRIALS = 200
CONTEXT_SIZE = 4

# ---------------------------------------------------------------- observable equivalence


@dataclass(frozen=True)
class Equal:
    pass


@dataclass(frozen=True)
class Differ:
    detail: str


@dataclass(frozen=True)
class Inconclusive:
    detail: str


ObsVerdict = Union[Equal, Differ, Inconclusive]


def _kind(o) -> str:
    match o:
        case Value():
            return "value"
        case Blamed(label):
            return f"blame {label}"
        case Stuck():
            return "stuck"
    return "fuel"


def compare_outcomes(o1, o2, compare_values: bool = False) -> ObsVerdict:
    if isinstance(o1, FuelExhausted) or isinstance(o2, FuelExhausted):
        return Inconclusive("fuel exhausted")
    k1, k2 = _kind(o1), _kind(o2)
    if k1 != k2:
        return Differ(f"{show_outcome(o1)} vs {show_outcome(o2)}")
    if compare_values and isinstance(o1, Value) and isinstance(o1.term, Const) and isinstance(o2.term, Const):
        if o1.term != o2.term:
            return Differ(f"{o1.term} vs {o2.term}")
    return Equal()


def obs_equiv(e1, e2, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT, compare_values: bool = False) -> ObsVerdict:
    """Both terminate, both blame the same label, or both get stuck."""
    return compare_outcomes(evaluate(e1, fuel, sig), evaluate(e2, fuel, sig), compare_values)


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class WitnessRecord:
    seed: int
    trial: int
    context: str
    subst: str
    outcome1: str
    outcome2: str
    program1: str = ""
    program2: str = ""

    def as_json(self) -> str:
        return json.dumps(self.__dict__, ensure_ascii=False, sort_keys=True)


@dataclass
class EquivReport:
    name: str = ""
    trials: int = 0
    agreements: int = 0
    inconclusive: int = 0
    skipped: int = 0
    witnesses: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.witnesses:
            return "differ"
        return "equal" if self.agreements else "inconclusive"

    def merge(self, other: "EquivReport") -> "EquivReport":
        self.trials += other.trials
        self.agreements += other.agreements
        self.inconclusive += other.inconclusive
        self.skipped += other.skipped
        self.witnesses += other.witnesses
        self.notes += other.notes
        return self

    def text(self) -> str:
        head = f"{self.name + ': ' if self.name else ''}{self.status}"
        lines = [
            head,
            f"  trials {self.trials}, agreements {self.agreements}, inconclusive {self.inconclusive}, skipped {self.skipped}, witnesses {len(self.witnesses)}",
        ]
        for w in sorted(self.witnesses, key=lambda w: (w.seed, w.trial))[:10]:
            lines.append(f"  witness seed={w.seed} trial={w.trial}")
            lines.append(f"    context {w.context}")
            if w.subst:
                lines.append(f"    subst   {w.subst}")
            lines.append(f"    left    {w.outcome1}")
            lines.append(f"    right   {w.outcome2}")
        lines += [f"  note: {n}" for n in self.notes[:10]]
        return "\n".join(lines)

    def jsonl(self) -> str:
        return "\n".join(w.as_json() for w in sorted(self.witnesses, key=lambda w: (w.seed, w.trial)))


def trial_rng(seed: int, trial: int) -> random.Random:
    return random.Random(seed * 1_000_003 + trial)


# ---------------------------------------------------------------- CIU testing


@dataclass(frozen=True)
class Trial:
    sigma: ClosingSubst
    frames: tuple
    program1: object
    program2: object
    observe_values: bool


def build_trial(ctx: Context, ty: Type, e1, e2, seed: int, trial: int, sig: Signature = sigmod.DEFAULT, size: int = CONTEXT_SIZE) -> Trial | None:
    rng = trial_rng(seed, trial)
    sigma = gen_closing_subst(ctx, rng, sig)
    if sigma is None:
        return None
    frames, result = gen_static_context(sigma.apply(ty), rng, size, sig)
    p1 = plug(frames, sigma.apply(e1))
    p2 = plug(frames, sigma.apply(e2))
    return Trial(sigma, frames, p1, p2, isinstance(unref(result), Base))


def ciu_test(
    ctx: Context,
    ty: Type,
    e1,
    e2,
    trials: int = DEFAULT_TRIALS,
    fuel: int = DEFAULT_FUEL,
    seed: int = 0,
    sig: Signature = sigmod.DEFAULT,
    check_typed: bool = True,
    name: str = "",
) -> EquivReport:
    """Compare ``e1`` (typed at ``ty`` under ``ctx``) with ``e2`` (which may
    be ill typed) under random closing substitutions and static contexts."""
    report = EquivReport(name)
    for i in range(trials):
        t = build_trial(ctx, ty, e1, e2, seed, i, sig)
        if t is None:
            report.skipped += 1
            continue
        if check_typed:
            try:
                typecheck(EMPTY, t.program1, sig, runtime=True)
            except FhTypeError as err:
                report.skipped += 1
                report.notes.append(f"trial {i}: left program does not typecheck: {err}")
                continue
        report.trials += 1
        o1, o2 = evaluate(t.program1, fuel, sig), evaluate(t.program2, fuel, sig)
        v = compare_outcomes(o1, o2, t.observe_values)
        match v:
            case Equal():
                report.agreements += 1
            case Inconclusive():
                report.inconclusive += 1
            case Differ():
                report.witnesses.append(
                    WitnessRecord(seed, i, show_context(t.frames), t.sigma.show() if t.sigma else "", show_outcome(o1), show_outcome(o2), str(t.program1), str(t.program2))
                )
    return report


def replay_witness(ctx: Context, ty: Type, e1, e2, w: WitnessRecord, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT) -> bool:
    """Rebuild the trial behind a witness and check it still disagrees identically."""
    t = build_trial(ctx, ty, e1, e2, w.seed, w.trial, sig)
    if t is None:
        return False
    o1, o2 = evaluate(t.program1, fuel, sig), evaluate(t.program2, fuel, sig)
    return (show_outcome(o1), show_outcome(o2)) == (w.outcome1, w.outcome2)


# ---------------------------------------------------------------- cotermination


def reducible_term(rng: random.Random, sig: Signature, size: int = 5):
    """A closed well-typed non-value ``e1`` that takes a step, with its type."""
    for _ in range(30):
        got = gen_typed_term(rng, size, sig, depth=1)
        if got is None:
            continue
        e1, ty = got
        if is_value(e1):
            continue
        e2 = step(e1, sig)
        if e2 is not None:
            return e1, e2, ty
    return None


def cotermination_test(trials: int = 300, fuel: int = DEFAULT_FUEL, seed: int = 0, sig: Signature = sigmod.DEFAULT) -> EquivReport:
    report = EquivReport("cotermination")
    for i in range(trials):
        rng = trial_rng(seed, i)
        red = reducible_term(rng, sig)
        if red is None:
            report.skipped += 1
            continue
        e1, e2, ty = red
        x = "hole"
        outer_ty = gen_type(rng, 1)
        e = gen_term(EMPTY.bind(x, ty), outer_ty, 6, rng, sig, blame=False)
        if e is None:
            report.skipped += 1
            continue
        p1, p2 = subst_term(e, e1, x), subst_term(e, e2, x)
        o1, o2 = evaluate(p1, fuel, sig), evaluate(p2, fuel, sig)
        report.trials += 1
        v = compare_outcomes(o1, o2, compare_values=False)
        if isinstance(v, Equal) and isinstance(o1, Value) and o1.term in (Const(True), Const(False)):
            if o1.term != o2.term:
                v = Differ(f"{o1.term} vs {o2.term}")
        match v:
            case Equal():
                report.agreements += 1
            case Inconclusive():
                report.inconclusive += 1
            case Differ():
                report.witnesses.append(WitnessRecord(seed, i, f"{e} with hole := {e1} / {e2}", "", show_outcome(o1), show_outcome(o2), str(p1), str(p2)))
    return report


# ---------------------------------------------------------------- property suites


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)
    inconclusive: int = 0
    skipped: int = 0
    reports: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not any(r.witnesses for r in self.reports)

    def text(self) -> str:
        witnesses = sum(len(r.witnesses) for r in self.reports)
        lines = [
            f"{self.name}: {'ok' if self.ok else 'FAILED'}",
            f"  checked {self.checked}, failures {len(self.failures)}, witnesses {witnesses}, inconclusive {self.inconclusive}, skipped {self.skipped}",
        ]
        lines += [f"  failure: {f}" for f in self.failures[:10]]
        for r in self.reports:
            if r.witnesses:
                lines.append("  " + r.text().replace("\n", "\n  "))
        return "\n".join(lines)


def soundness_suite(trials: int = 500, seed: int = 42, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT, size: int = 8) -> SuiteResult:
    """Closed well-typed terms never get stuck, and values satisfy the
    refinements of their type."""
    res = SuiteResult("soundness")
    rng = random.Random(seed)
    while res.checked < trials:
        got = gen_typed_term(rng, size, sig)
        if got is None:
            res.skipped += 1
            continue
        e, ty = got
        res.checked += 1
        out = evaluate(e, fuel, sig)
        match out:
            case Stuck(t):
                res.failures.append(f"{e} got stuck at {t}")
            case FuelExhausted():
                res.inconclusive += 1
            case Value(v):
                for p in refines(ty):
                    check = evaluate(App(p, v), fuel, sig)
                    if check != Value(Const(True)):
                        res.failures.append(f"{e} evaluated to {v}, which fails {p}: {show_outcome(check)}")
    return res


def coterm_suite(trials: int = 300, seed: int = 42, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT) -> SuiteResult:
    res = SuiteResult("coterm")
    rep = cotermination_test(trials, fuel, seed, sig)
    res.checked, res.inconclusive, res.skipped = rep.trials, rep.inconclusive, rep.skipped
    res.reports.append(rep)
    return res


def _gen_fun_type(rng: random.Random) -> Type:
    while True:
        t = gen_type(rng, 2, poly=False)
        if isinstance(t, Fun):
            return t


def _gen_forall_type(rng: random.Random) -> Type:
    while True:
        t = gen_type(rng, 2)
        if isinstance(t, Forall):
            return t


def law_instances(law: str, n: int, seed: int) -> list[tuple[Cast, object]]:
    """``n`` random (cast, decomposed or identity form) pairs for a law."""
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        label = rng.choice(LABELS)
        match law:
            case "fun":
                t1 = _gen_fun_type(rng)
                t2 = vary_refinements(t1, rng)
            case "forall":
                t1 = _gen_forall_type(rng)
                t2 = vary_refinements(t1, rng)
            case "precheck":
                t1 = gen_type(rng, 1, poly=False)
                base = unref(t1)
                if not isinstance(base, Base):
                    continue
                t2 = gen_refinement(base, rng)
                if rng.random() < 0.3:
                    t2 = Refine("v", t2, Const(True))
            case "refl":
                t1 = t2 = gen_type(rng, 2)
            case _:
                raise ValueError(law)
        cast = Cast(t1, t2, label)
        other = identity(t1) if law == "refl" else decompose_cast(cast)
        out.append((cast, other))
    return out


def decomp_suite(per_law: int = 50, trials: int = 40, seed: int = 42, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT) -> SuiteResult:
    """Casts against their statically decomposed forms."""
    res = SuiteResult("decomp")
    for k, law in enumerate(("fun", "forall", "precheck", "refl")):
        for j, (cast, other) in enumerate(law_instances(law, per_law, seed + k)):
            ty = typecheck(EMPTY, cast, sig)
            if law == "precheck":
                try:
                    typecheck(EMPTY, other, sig)
                except FhTypeError as err:
                    res.failures.append(f"{other} does not re-typecheck: {err}")
            rep = ciu_test(EMPTY, ty, cast, other, trials, fuel, seed + j, sig, name=f"{law} {cast}")
            res.checked += 1
            res.inconclusive += rep.inconclusive
            res.reports.append(rep)
    return res


# curated upcasts provable by the sound tactics
CURATED_UPCASTS = [
    ("{x:Bool | x}", "Bool"),
    ("{x:Bool | x}", "{y:Bool | y || not(y)}"),
    ("{x:Bool | not(x)}", "{y:Bool | eqBool(y, false)}"),
    ("{x:Bool | x && true}", "{y:Bool | y}"),
    ("Bool", "{y:Bool | y || not(y)}"),
    ("{x:Int | x > 0}", "{y:Int | y > 0}"),
    ("{x:Int | x > 0}", "Int"),
    ("{x:Int | x > 0}", "{y:Int | y >= 0}"),
    ("{x:Int | x > 0}", "{y:Int | y != 0}"),
    ("{x:Int | prime?(x)}", "{y:Int | y > 0}"),
    ("{x:Int | x == 3}", "{y:Int | prime?(y)}"),
    ("{x:Int | x == 5}", "{y:Int | y > 2}"),
    ("{x:Int | x > 2}", "{y:Int | y >= 0}"),
    ("{x:{y:Int | y > 2} | prime?(<{y:Int | y > 2} => Int>^l x)}", "{z:Int | z > 0}"),
    ("Int", "{y:Int | true}"),
    ("{x:Int | x >= 0} -> Int", "{x:Int | x > 0} -> Int"),
    ("Int -> {y:Int | y > 0}", "Int -> {y:Int | y >= 0}"),
    ("({x:Int | x != 0} -> {y:Int | prime?(y)})", "({x:Int | x > 0} -> {y:Int | y > 0})"),
    ("forall a. a -> a", "forall a. a -> a"),
    ("forall a. {x:Bool | x} -> a", "forall a. {x:Bool | x && true} -> a"),
]


def curated_upcasts():
    from .parser import parse_type

    return [(parse_type(a), parse_type(b)) for a, b in CURATED_UPCASTS]


def upcast_pairs(n_generated: int, seed: int, sig: Signature = sigmod.DEFAULT, cfg: ProverConfig = DEFAULT_CONFIG) -> tuple[list, list]:
    """Curated pairs plus generated pairs the prover says ``Yes`` to.
    Returns (pairs, curated pairs the prover failed on)."""
    pairs, unproved = [], []
    for t1, t2 in curated_upcasts():
        if isinstance(subtype(EMPTY, t1, t2, sig, cfg), Yes):
            pairs.append((t1, t2))
        else:
            unproved.append((t1, t2))
    rng = random.Random(seed)
    for _ in range(n_generated):
        t1 = gen_type(rng, 2)
        t2 = vary_refinements(t1, rng)
        if isinstance(subtype(EMPTY, t1, t2, sig, cfg), Yes):
            pairs.append((t1, t2))
    return pairs, unproved


def upcast_suite(trials: int = 200, seed: int = 42, generated: int = 60, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT) -> SuiteResult:
    res = SuiteResult("upcast")
    pairs, unproved = upcast_pairs(generated, seed, sig)
    res.failures += [f"curated pair not proved: {a} <: {b}" for a, b in unproved]
    for j, (t1, t2) in enumerate(pairs):
        cast = Cast(t1, t2, "l")
        rep = ciu_test(EMPTY, typecheck(EMPTY, cast, sig), cast, identity(t1), trials, fuel, seed + j, sig, name=f"upcast {t1} <: {t2}")
        res.checked += 1
        res.inconclusive += rep.inconclusive
        res.reports.append(rep)
    return res


def selfify_pairs(seed: int, n: int = 40, sig: Signature = sigmod.DEFAULT) -> list:
    """Closed (type, term) pairs: the corpus programs plus generated ones."""
    from .corpus import corpus_programs

    out = []
    for prog in corpus_programs():
        if prog.context.entries:
            continue
        try:
            out.append((typecheck(EMPTY, prog.term, prog.signature), prog.term, prog.signature))
        except FhTypeError:
            continue
    rng = random.Random(seed)
    while n > 0:
        got = gen_typed_term(rng, 6, sig)
        # selfification copies the term under binders, where run-time forms are untyped
        if got is not None and not any(isinstance(t, (WaitCheck, ActiveCheck, Blame)) for t in subterms(got[0])):
            out.append((got[1], got[0], sig))
            n -= 1
    return out


def selfify_suite(trials: int = 100, seed: int = 42, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT) -> SuiteResult:
    """``<T => self(T, e)>^l e`` against ``e``."""
    res = SuiteResult("selfify")
    for j, (ty, e, s) in enumerate(selfify_pairs(seed, sig=sig)):
        strong = selfify(ty, e, s)
        left = App(Cast(ty, strong, "l"), e)
        try:
            lty = typecheck(EMPTY, left, s)
        except FhTypeError as err:
            res.failures.append(f"{left} does not typecheck: {err}")
            continue
        rep = ciu_test(EMPTY, lty, left, e, trials, fuel, seed + j, s, name=f"selfify {e}")
        res.checked += 1
        res.inconclusive += rep.inconclusive
        res.reports.append(rep)
    return res


def laws_suite(trials: int = 100, seed: int = 42, fuel: int = DEFAULT_FUEL, sig: Signature = sigmod.DEFAULT) -> SuiteResult:
    res = SuiteResult("laws")
    for sub in (upcast_suite(trials, seed, fuel=fuel, sig=sig), selfify_suite(trials, seed, fuel, sig)):
        res.checked += sub.checked
        res.failures += sub.failures
        res.inconclusive += sub.inconclusive
        res.reports += sub.reports
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "soundness": lambda trials, seed, fuel: soundness_suite(trials, seed, fuel),
    "coterm": lambda trials, seed, fuel: coterm_suite(trials, seed, fuel),
    "decomp": lambda trials, seed, fuel: decomp_suite(max(1, trials // 4), 40, seed, fuel),
    "laws": lambda trials, seed, fuel: laws_suite(trials, seed, fuel),
}

