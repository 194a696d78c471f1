"""Acceptance criteria 1 to 10.

Every test is tagged with the criterion it supports; conftest.py prints one
PASS/FAIL line per criterion at the end of the run. Run this file alone with
``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import random
from pathlib import Path

import pytest

from fhcalc import harness
from fhcalc.cli import main
from fhcalc.corpus import load
from fhcalc.generate import gen_typed_term
from fhcalc.optimizer import count_casts, optimize, selfify
from fhcalc.parser import parse_file, parse_term, parse_type
from fhcalc.semantics import (
    ActiveFrame,
    AppL,
    AppR,
    Blamed,
    OpFrame,
    TyAppFrame,
    Value,
    WaitFrame,
    decompose,
    evaluate,
    reduce,
    trace,
)
from fhcalc.subtyping import SELF_LABEL, Yes
from fhcalc.syntax import (
    EMPTY,
    ActiveCheck,
    App,
    Blame,
    Cast,
    Const,
    Lam,
    Op,
    Refine,
    TApp,
    Var,
    WaitCheck,
    alpha_eq,
    is_value,
    mk_let,
    subterms,
    term_size,
)
from fhcalc.typesystem import typecheck

GOLDEN = Path(__file__).parent / "golden"
criterion = pytest.mark.criterion


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


# ---------------------------------------------------------------- 1


GOLDEN_OUTCOMES = {
    "cast_pos": Value(Const(5)),
    "cast_neg": Blamed("l"),
    "prime_2": Blamed("l"),
    "prime_5": Value(Const(5)),
    "fussy_nested": Value(Const(5)),
    "fussy_refl": Blamed("l"),
    "fussy_false": Blamed("l"),
}


@criterion(1, "golden traces")
@pytest.mark.parametrize("name", sorted(GOLDEN_OUTCOMES))
def test_golden_trace(name, capsys):
    code, out = run_cli(capsys, "eval", "--trace", GOLDEN / f"{name}.fh")
    expected = (GOLDEN / f"{name}.trace").read_text()
    assert code == 0
    assert out.split() == expected.split()
    assert out == expected
    src = parse_file((GOLDEN / f"{name}.fh").read_text())
    assert evaluate(src.term) == GOLDEN_OUTCOMES[name]


@criterion(1, "golden traces")
def test_fussy_trace_checks_both_nested_refinements():
    src = parse_file((GOLDEN / "fussy_nested.fh").read_text())
    waiting = {str(t.ref) for s in trace(src.term) for t in subterms(s) if isinstance(t, WaitCheck)}
    assert waiting == {"{x:Int | prime?(x)}", "{y:{x:Int | prime?(x)} | y > 2}"}


# ---------------------------------------------------------------- 2


@criterion(2, "type soundness: 500 terms, seed 42, no stuck, value inversion")
def test_type_soundness_suite():
    res = harness.soundness_suite(500, 42, 10_000)
    assert res.checked == 500
    assert res.failures == []
    assert res.inconclusive <= 0.02 * res.checked


# ---------------------------------------------------------------- 3


def _eval_positions(e):
    """Every child position that an evaluation context may descend into,
    read off the context grammar directly."""
    match e:
        case Op(name, args):
            for i, a in enumerate(args):
                if all(is_value(b) for b in args[:i]):
                    yield OpFrame(name, args[:i], args[i + 1:]), a
        case App(fn, arg):
            yield AppL(arg), fn
            if is_value(fn):
                yield AppR(fn), arg
        case TApp(fn, ty):
            yield TyAppFrame(ty), fn
        case WaitCheck(ref, subject, label):
            yield WaitFrame(ref, label), subject
        case ActiveCheck(ref, state, value, label):
            yield ActiveFrame(ref, value, label), state


def all_decompositions(e):
    """Exhaustive search: every (context, focus) split where the focus is a
    redex or blame."""
    found = []
    if isinstance(e, Blame) or (not is_value(e) and reduce(e) is not None):
        found.append(((), e))
    for frame, child in _eval_positions(e):
        if is_value(child):
            continue
        found += [((frame,) + ctx, focus) for ctx, focus in all_decompositions(child)]
    return found


def _decomposition_terms(n=300, seed=3):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        got = gen_typed_term(rng, rng.randint(1, 12))
        if got is not None and term_size(got[0]) <= 12:
            out.append(got[0])
    return out


@criterion(3, "determinism and unique decomposition")
def test_unique_decomposition_against_oracle():
    checked = 0
    for e in _decomposition_terms():
        for state in trace(e, 300):
            oracle = all_decompositions(state)
            assert len(oracle) <= 1, f"{state} splits {len(oracle)} ways"
            got = decompose(state)
            assert (got is None and not oracle) or [got] == oracle, str(state)
            checked += 1
    assert checked >= 300


@criterion(3, "determinism and unique decomposition")
def test_repeated_evaluation_is_identical():
    for e in _decomposition_terms(100, seed=4):
        assert trace(e, 500) == trace(e, 500)
        assert evaluate(e) == evaluate(e)


# ---------------------------------------------------------------- 4


@criterion(4, "cotermination: 300 triples, 0 witnesses")
def test_cotermination_suite():
    res = harness.coterm_suite(300, 42)
    assert res.checked == 300
    assert res.ok, res.text()


# ---------------------------------------------------------------- 5


@criterion(5, "upcast elimination: curated and generated upcasts vs identity")
def test_upcasts_behave_as_identity():
    res = harness.upcast_suite(200, 42)
    assert res.failures == []
    assert res.checked >= len(harness.CURATED_UPCASTS)
    assert res.ok, res.text()


@criterion(5, "upcast elimination: curated and generated upcasts vs identity")
def test_upcast_negative_control_finds_witness():
    t1, t2 = parse_type("{x:Int | x >= 0}"), parse_type("{x:Int | x != 0}")
    cast = Cast(t1, t2, "l")
    rep = harness.ciu_test(EMPTY, typecheck(EMPTY, cast), cast, Lam("x", t1, Var("x")), trials=200, seed=42)
    assert rep.status == "differ"
    assert len(rep.witnesses) >= 1


# ---------------------------------------------------------------- 6


@criterion(6, "selfification: equations and cast elimination")
def test_selfify_equations():
    e = parse_term("add(1, 2)")
    assert alpha_eq(selfify(parse_type("Int"), e), parse_type("{x:Int | x == add(1, 2)}"))
    assert selfify(parse_type("a"), Var("f")) == parse_type("a")
    f = Var("f")
    assert alpha_eq(selfify(parse_type("(x:Int) -> Bool"), f), parse_type("(x:Int) -> {y:Bool | eqBool(y, f x)}"))
    assert alpha_eq(selfify(parse_type("forall a. Int"), f), parse_type("forall a. {y:Int | y == f [a]}"))

    ref = parse_type("{x:Int | x > 0}")
    inner = parse_type("Int")
    strong = Refine("y", inner, Op("eqInt", (Var("y"), App(Cast(ref, inner, SELF_LABEL), f))))
    got = selfify(ref, f)
    assert alpha_eq(got.base, strong)
    expected_pred = mk_let("x", inner, App(Cast(strong, inner, SELF_LABEL), Var(got.var)), parse_term("x > 0"))
    assert alpha_eq(got.pred, expected_pred)


@criterion(6, "selfification: equations and cast elimination")
def test_selfify_casts_are_redundant():
    res = harness.selfify_suite(100, 42)
    assert res.failures == []
    assert res.ok, res.text()


# ---------------------------------------------------------------- 7


@criterion(7, "cast decomposition laws: 50 instances each, 0 witnesses")
def test_decomposition_laws():
    res = harness.decomp_suite(50, 40, 42)
    assert res.checked == 200
    assert res.failures == []
    assert res.ok, res.text()


# ---------------------------------------------------------------- 8


@criterion(8, "function cast example: codomain cast eliminated, domain retained")
def test_function_cast_example(tmp_path, capsys):
    prog = load("fun_cast")
    out, log = optimize(prog.context, prog.term, sig=prog.signature)
    assert log.rules() == ["DecompFun", "UpcastElim"]
    expected = parse_term(
        "fun (f:{x:Int | x != 0} -> {y:Int | prime?(y)}) fun (x:{x:Int | x >= 0})"
        " let y:{x:Int | x != 0} = <{x:Int | x >= 0} => {x:Int | x != 0}>^l x in f y"
    )
    assert alpha_eq(out, expected)

    (tmp_path / "orig.fh").write_text(prog.text)
    (tmp_path / "opt.fh").write_text(str(out) + "\n")
    code, text = run_cli(capsys, "difftest", tmp_path / "orig.fh", tmp_path / "opt.fh", "--trials", 200)
    assert code == 0, text
    assert "witnesses 0" in text


# ---------------------------------------------------------------- 9


@criterion(9, "stack program: not-empty cast removed, evaluates to 0")
def test_stack_program(tmp_path, capsys):
    prog = load("stack")
    out, log = optimize(prog.context, prog.term, sig=prog.signature)
    assert "SelfAssist" in log.rules()
    assert not [c for c in subterms(out) if isinstance(c, Cast) and c.label == "l"]
    assert count_casts(out) == 0
    assert evaluate(out, sig=prog.signature) == Value(Const(0))
    assert evaluate(prog.term, sig=prog.signature) == Value(Const(0))

    (tmp_path / "orig.fh").write_text(prog.text)
    code, text = run_cli(capsys, "optimize", tmp_path / "orig.fh")
    assert code == 0
    (tmp_path / "opt.fh").write_text(text)
    code, text = run_cli(capsys, "difftest", tmp_path / "orig.fh", tmp_path / "opt.fh", "--trials", 200)
    assert code == 0, text
    assert "witnesses 0" in text


# ---------------------------------------------------------------- 10


@criterion(10, "optimizer idempotence and justified rewrites on the corpus")
def test_optimizer_idempotent_and_justified(corpus):
    for prog in corpus:
        out, log = optimize(prog.context, prog.term, sig=prog.signature)
        again, log2 = optimize(prog.context, out, sig=prog.signature)
        assert alpha_eq(again, out), prog.name
        assert log2.entries == [], prog.name
        assert alpha_eq(log.replay(), out), prog.name
        for ent in log.entries:
            assert ent.verdict is None or isinstance(ent.verdict, Yes), (prog.name, ent.line())
            if ent.rule in ("UpcastElim", "SelfAssist", "ForgetSource"):
                assert isinstance(ent.verdict, Yes), (prog.name, ent.line())


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
