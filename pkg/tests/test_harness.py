import json

from fhcalc.harness import (
    SUITES,
    Differ,
    Equal,
    Inconclusive,
    ciu_test,
    cotermination_test,
    obs_equiv,
    replay_witness,
)
from fhcalc.parser import parse_context as C
from fhcalc.parser import parse_term as P
from fhcalc.parser import parse_type as T
from fhcalc.syntax import EMPTY


class TestObservableEquivalence:
    def test_values_agree(self):
        assert obs_equiv(P("5"), P("(fun (x:Int) x) 5")) == Equal()

    def test_blame_labels_must_match(self):
        assert isinstance(obs_equiv(P("(fun (x:Int) x) (blame l1)"), P("(fun (x:Int) x) (blame l2)")), Differ)
        assert obs_equiv(P("1 + blame l"), P("blame l")) == Equal()

    def test_value_against_blame(self):
        assert isinstance(obs_equiv(P("5"), P("<Int => {x:Int | x > 5}>^l 5")), Differ)

    def test_stuck_terms_agree(self):
        assert obs_equiv(P("1 + true"), P("true 1")) == Equal()

    def test_fuel_exhaustion_is_inconclusive(self):
        e = P("(fun (x:Int) x) ((fun (x:Int) x) 1)")
        assert isinstance(obs_equiv(e, P("1"), fuel=1), Inconclusive)

    def test_values_compared_only_on_request(self):
        assert obs_equiv(P("1"), P("2")) == Equal()
        assert isinstance(obs_equiv(P("1"), P("2"), compare_values=True), Differ)


class TestCiu:
    def test_identical_terms(self):
        e = P("fun (x:Int) <Int => {y:Int | y > 0}>^l x")
        rep = ciu_test(EMPTY, T("Int -> {y:Int | y > 0}"), e, e, trials=50, seed=3)
        assert rep.status == "equal" and not rep.witnesses

    def test_dropping_a_checking_cast_is_caught(self):
        left = P("<Int => {x:Int | x > 0}>^l")
        rep = ciu_test(EMPTY, T("Int -> {x:Int | x > 0}"), left, P("fun (x:Int) x"), trials=100, seed=1, check_typed=True)
        assert rep.status == "differ"
        w = rep.witnesses[0]
        assert "blame l" in (w.outcome1, w.outcome2)
        assert replay_witness(EMPTY, T("Int -> {x:Int | x > 0}"), left, P("fun (x:Int) x"), w)

    def test_open_terms_use_closing_substitutions(self):
        ctx = C("n : {x:Int | x > 3}")
        left = P("<{x:Int | x > 3} => {x:Int | x > 0}>^l n")
        rep = ciu_test(ctx, T("{x:Int | x > 0}"), left, P("n"), trials=40, seed=2)
        assert rep.status == "equal"
        rep = ciu_test(ctx, T("{x:Int | x > 0}"), left, P("<Int => {x:Int | x > 0}>^l 1"), trials=40, seed=2)
        assert rep.status == "differ"
        assert rep.witnesses[0].subst.startswith("[n := ")

    def test_seeds_are_deterministic(self):
        args = (EMPTY, T("Int -> {x:Int | x > 0}"), P("<Int => {x:Int | x > 0}>^l"), P("fun (x:Int) x"))
        a = ciu_test(*args, trials=30, seed=9)
        b = ciu_test(*args, trials=30, seed=9)
        assert a.jsonl() == b.jsonl() and a.agreements == b.agreements

    def test_jsonl_records(self):
        rep = ciu_test(EMPTY, T("Int -> {x:Int | x > 0}"), P("<Int => {x:Int | x > 0}>^l"), P("fun (x:Int) x"), trials=40, seed=1)
        lines = rep.jsonl().splitlines()
        assert len(lines) == len(rep.witnesses) > 0
        rec = json.loads(lines[0])
        assert {"seed", "trial", "context", "subst", "outcome1", "outcome2", "program1", "program2"} <= rec.keys()

    def test_ill_typed_left_trials_are_skipped(self):
        rep = ciu_test(EMPTY, T("Int"), P("1 + true"), P("1"), trials=5)
        assert rep.trials == 0 and rep.skipped == 5
        assert rep.status == "inconclusive"


class TestCotermination:
    def test_small_run(self):
        rep = cotermination_test(40, seed=4)
        assert rep.trials > 20 and not rep.witnesses, rep.text()


def test_every_suite_runs_small():
    for name, run in SUITES.items():
        res = run(8, 7, 500)
        assert res.ok, res.text()
        assert name in res.text()
