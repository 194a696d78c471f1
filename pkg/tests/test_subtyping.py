import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhcalc.generate import gen_refinement, gen_value
from fhcalc.parser import parse_context as C
from fhcalc.parser import parse_term as P
from fhcalc.parser import parse_type as T
from fhcalc.semantics import satisfies_refinements
from fhcalc.signature import DEFAULT
from fhcalc.subtyping import (
    TACTICS,
    No,
    ProverConfig,
    Unknown,
    Yes,
    explain,
    replay,
    satisfies,
    simplify,
    subtype,
)
from fhcalc.syntax import BOOL, EMPTY, INT, Const, TVar


def tactic_of(v):
    assert isinstance(v, Yes), explain(v)
    return v.derivation.tactic


class TestSatisfies:
    def test_literal(self):
        assert tactic_of(satisfies(C("x : Int"), P("true"))) == "literal-true"

    def test_hypothesis(self):
        assert tactic_of(satisfies(C("x : {y:Int | y > 0}"), P("x > 0"))) == "hypothesis-match"

    def test_refutation(self):
        v = satisfies(C("x : Int"), P("x > 0"))
        assert isinstance(v, No) and v.witness is not None
        assert replay(v.witness)
        assert int(v.witness.subst.terms["x"].value) <= 0

    def test_closed_eval(self):
        assert tactic_of(satisfies(EMPTY, P("prime?(7)"))) == "closed-eval"
        assert isinstance(satisfies(EMPTY, P("prime?(8)")), No)

    def test_interval(self):
        assert tactic_of(satisfies(C("x : {y:Int | y > 2}"), P("x + 1 > 3"))) == "interval"
        assert tactic_of(satisfies(C("x : {y:Int | prime?(y)}"), P("x >= 2"))) == "interval"

    def test_bool_enumeration(self):
        assert tactic_of(satisfies(C("b : Bool"), P("b || not(b)"))) == "bool-enumeration"

    def test_unknown_without_tactics_or_sampling(self):
        cfg = ProverConfig(tactics=(), samples=0)
        v = satisfies(C("x : {y:Int | y > 0}"), P("x > 0"), cfg=cfg)
        assert isinstance(v, Unknown)
        assert "x > 0" in explain(v)

    def test_simplify_erases_internal_casts(self):
        assert simplify(P("(fun (y:Int) y > 0) x")) == P("x > 0")

    def test_tactic_selection_is_validated(self):
        with pytest.raises(ValueError):
            ProverConfig().with_tactics(["magic"])
        assert ProverConfig().with_tactics(TACTICS[:2]).tactics == TACTICS[:2]


class TestSubtype:
    def test_reflexive_base_and_variables(self):
        assert isinstance(subtype(EMPTY, INT, INT), Yes)
        assert isinstance(subtype(C("type a"), TVar("a"), TVar("a")), Yes)
        assert isinstance(subtype(EMPTY, INT, BOOL), No)

    def test_bool_enumeration_example(self):
        v = subtype(EMPTY, T("{x:Bool | x}"), T("{x:Bool | x || not(x)}"))
        assert isinstance(v, Yes)

    def test_refuted_with_witness(self):
        v = subtype(EMPTY, T("{x:Int | x >= 0}"), T("{x:Int | x != 0}"))
        assert isinstance(v, No)
        assert v.witness.subst.show() == "[x := 0]"
        assert replay(v.witness)
        assert "[x := 0]" in explain(v)

    def test_function_types_are_contravariant(self):
        good = subtype(EMPTY, T("{x:Int | x != 0} -> {y:Int | prime?(y)}"), T("{x:Int | x > 0} -> {y:Int | y > 0}"))
        assert isinstance(good, Yes)
        text = explain(good)
        assert text.count("S_RefineR") == 2 and "S_Fun" in text
        bad = subtype(EMPTY, T("{x:Int | x != 0} -> {y:Int | prime?(y)}"), T("{x:Int | x >= 0} -> {y:Int | y > 0}"))
        assert isinstance(bad, No)

    def test_polymorphic(self):
        assert isinstance(subtype(EMPTY, T("forall a. a -> a"), T("forall b. b -> b")), Yes)

    def test_nested_refinements(self):
        v = subtype(EMPTY, T("{x:{y:Int | y > 2} | prime?(<{y:Int | y > 2} => Int>^l x)}"), T("{z:Int | z > 0}"))
        assert isinstance(v, Yes)

    def test_curated_pairs_are_proved(self):
        from fhcalc.harness import curated_upcasts

        for t1, t2 in curated_upcasts():
            assert isinstance(subtype(EMPTY, t1, t2), Yes), (t1, t2)

    def test_unknown_names_the_goal(self):
        v = subtype(EMPTY, T("{x:Int | x > 0}"), T("{x:Int | x > 1}"), cfg=ProverConfig(samples=0))
        assert isinstance(v, Unknown)
        assert "x > 1" in explain(v)

    @given(st.integers(0, 100_000))
    @settings(max_examples=150, deadline=None)
    def test_yes_is_sound_on_base_refinements(self, seed):
        rng = random.Random(seed)
        base = rng.choice([INT, BOOL])
        t1, t2 = gen_refinement(base, rng), gen_refinement(base, rng)
        v = subtype(EMPTY, t1, t2)
        if isinstance(v, Yes):
            values = [Const(b) for b in (True, False)] if base == BOOL else [Const(n) for n in range(-30, 31)]
            for k in values:
                if satisfies_refinements(t1, k, DEFAULT):
                    assert satisfies_refinements(t2, k, DEFAULT), (t1, t2, k)
        elif isinstance(v, No) and v.witness is not None:
            assert replay(v.witness)

    def test_generated_values_of_subtypes(self):
        rng = random.Random(5)
        t1, t2 = T("{x:Int | x > 3}"), T("{x:Int | x >= 0}")
        assert isinstance(subtype(EMPTY, t1, t2), Yes)
        for _ in range(20):
            k = gen_value(t1, rng)
            assert k is not None and k.value > 3
