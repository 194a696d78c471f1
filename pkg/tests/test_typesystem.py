import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhcalc.generate import gen_typed_term
from fhcalc.parser import parse_context, parse_file
from fhcalc.parser import parse_term as P
from fhcalc.parser import parse_type as T
from fhcalc.signature import DEFAULT, OpSig, Signature
from fhcalc.syntax import EMPTY, INT, Const, Op, alpha_eq, unref
from fhcalc.semantics import Value, evaluate
from fhcalc.typesystem import (
    FhTypeError,
    Verdict,
    compatible,
    conv_equiv,
    typecheck,
    validate_signature,
    well_typed,
    wf_context,
    wf_type,
)


def kind_of(fn, *args, **kw):
    with pytest.raises(FhTypeError) as err:
        fn(*args, **kw)
    return err.value.kind


class TestWellFormedness:
    def test_contexts(self):
        wf_context(EMPTY)
        wf_context(parse_context("x : Int; y : {z:Int | z > x}"))
        assert kind_of(wf_context, parse_context("x : Int; x : Bool")) == "DuplicateBinding"
        assert kind_of(wf_context, parse_context("y : {z:Int | z > x}")) == "UnboundVar"

    def test_types(self):
        wf_type(EMPTY, T("{x:Int | x > 0}"))
        assert kind_of(wf_type, EMPTY, T("a")) == "UnboundTypeVar"
        assert kind_of(wf_type, EMPTY, T("{x:Int | x + 1}")) == "NotBool"
        wf_type(parse_context("type a"), T("a -> a"))


class TestCompatibility:
    def test_examples(self):
        assert compatible(T("{x:Int | x > 0}"), INT)
        assert compatible(T("{x:Int | x != 0} -> Int"), T("{x:Int | x >= 0} -> {y:Int | y > 0}"))
        assert not compatible(INT, T("Bool"))
        assert compatible(T("forall a. a -> a"), T("forall b. {x:b | true} -> b"))
        assert not compatible(T("forall a. a"), T("forall a. Int"))


class TestConversion:
    def test_examples(self):
        assert conv_equiv(T("{x:Int | (fun (y:Int) y > 0) 5}"), T("{x:Int | 5 > 0}")) == Verdict.YES
        ty = T("(x:Int) -> {y:Int | y > x}")
        assert conv_equiv(ty, ty) == Verdict.YES
        assert conv_equiv(T("{x:Int | x > 0}"), T("{x:Int | 0 < x}")) == Verdict.NO

    def test_budget_exhaustion_is_unknown(self):
        heavy = T("{x:Int | (fun (a:Int) (fun (b:Int) (fun (c:Int) c > 0) b) a) 1}")
        assert conv_equiv(heavy, T("{x:Int | true}"), budget=1) == Verdict.UNKNOWN


class TestTyping:
    def test_cast(self):
        assert typecheck(EMPTY, P("<Int => {x:Int | 0 < x}>^l")) == T("Int -> {x:Int | 0 < x}")
        assert kind_of(typecheck, EMPTY, P("<Int => Bool>^l")) == "IncompatibleCast"

    def test_no_subsumption(self):
        ctx = parse_context("f : (x:{y:Int | y != 0}) -> Int")
        assert kind_of(typecheck, ctx, P("f 0")) == "ArgMismatch"
        assert typecheck(ctx, P("f (<Int => {y:Int | y != 0}>^l 0)")) == INT

    def test_dependent_application_substitutes(self):
        ctx = parse_context("f : (x:Int) -> {y:Int | y > x}")
        assert alpha_eq(typecheck(ctx, P("f 3")), T("{y:Int | y > 3}"))

    def test_polymorphism(self):
        assert typecheck(EMPTY, P("(tyfun (a) fun (x:a) x) [Int] 4")) == INT
        assert kind_of(typecheck, EMPTY, P("(fun (x:Int) x) [Int]")) == "NotAForall"
        assert kind_of(typecheck, EMPTY, P("5 5")) == "NotAFunction"

    def test_operations(self):
        assert typecheck(EMPTY, P("1 + 2")) == INT
        assert kind_of(typecheck, EMPTY, Op("frobnicate", (Const(1),))) == "UnknownOp"
        assert kind_of(typecheck, EMPTY, Op("add", (Const(1),))) == "ArityMismatch"
        assert kind_of(typecheck, EMPTY, P("1 + true")) == "ArgMismatch"

    def test_unbound(self):
        assert kind_of(typecheck, EMPTY, P("x")) == "UnboundVar"

    def test_waiting_checks_are_typed_under_any_context(self):
        assert typecheck(EMPTY, P("<<{x:Int | x > 0}, 5>>^l")) == T("{x:Int | x > 0}")
        assert typecheck(parse_context("y : Int"), P("<<{x:Int | x > 0}, y>>^l")) == T("{x:Int | x > 0}")
        assert alpha_eq(typecheck(EMPTY, P("fun (y:Int) <<{x:Int | x > 0}, <Int => Int>^l y>>^l")), T("Int -> {x:Int | x > 0}"))

    def test_active_checks_are_typed_only_when_closed_and_reachable(self):
        e = P("<{x:Int | x > 0}, 5 > 0, 5>^l")
        assert typecheck(EMPTY, e) == T("{x:Int | x > 0}")
        assert kind_of(typecheck, parse_context("y : Int"), P("<{x:Int | x > 0}, y > 0, y>^l"), runtime=True) == "RuntimeForm"
        assert kind_of(typecheck, EMPTY, P("<{x:Int | x > 0}, true, 0>^l"), runtime=True) == "RuntimeForm"

    def test_exact_typing_only_for_satisfying_constants(self):
        e = P("(fun (x:{y:Int | y > 0}) x) 5")
        assert kind_of(typecheck, EMPTY, e) == "ArgMismatch"
        assert typecheck(EMPTY, e, runtime=True) == T("{y:Int | y > 0}")
        assert kind_of(typecheck, EMPTY, P("(fun (x:{y:Int | y > 0}) x) 0"), runtime=True) == "ArgMismatch"

    def test_blame_needs_a_type(self):
        assert typecheck(EMPTY, P("(fun (x:Int) x) (blame l)")) == INT
        assert kind_of(typecheck, EMPTY, P("blame l")) == "BlameNeedsType"

    def test_corpus_typechecks(self, corpus):
        for prog in corpus:
            typecheck(prog.context, prog.term, prog.signature)

    @given(st.integers(0, 100_000))
    @settings(max_examples=80, deadline=None)
    def test_well_typed_agrees_with_typecheck(self, seed):
        got = gen_typed_term(random.Random(seed), 8)
        if got is None:
            return
        e, ty = got
        assert well_typed(EMPTY, e) == ty
        assert well_typed(EMPTY, P("1 + true")) is None


class TestSignature:
    def test_default_signature_is_valid(self):
        assert validate_signature(DEFAULT) == []

    def test_constants_satisfy_their_types(self):
        for c in (Const(True), Const(False), Const(0), Const(7)):
            ty = typecheck(EMPTY, c)
            assert unref(ty) == ty
            assert evaluate(P(f"<{ty} => {ty}>^l {c}")) == Value(c)

    def test_bad_constant_type_is_reported(self):
        problems = validate_signature(DEFAULT, {Const(0): T("{x:Int | x > 0}")})
        assert problems and "0" in problems[0]

    def test_partial_operation_with_guarded_domain_is_fine(self):
        src = parse_file("signature { div10 : (n:{y:Int | y != 0}) -> Int by table { (1) -> 10, (2) -> 5, (-1) -> -10, (-2) -> -5 }; }\n0")
        problems = validate_signature(src.signature, int_range=range(-2, 3))
        assert not any("div10" in p for p in problems), problems

    def test_wrong_result_refinement_is_reported(self):
        src = parse_file("signature { bad : (n:Int) -> {y:Int | y > 0} by table { _ -> 0 }; }\n0")
        assert any("bad" in p for p in validate_signature(src.signature, int_range=range(-2, 3)))

    def test_signature_api(self):
        assert isinstance(DEFAULT["add"], OpSig)
        assert isinstance(DEFAULT, Signature)
