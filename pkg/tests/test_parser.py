import random

import pytest

from fhcalc.generate import gen_typed_term
from fhcalc.parser import ParseError, parse_context, parse_file, parse_term, parse_type, show_file
from fhcalc.printer import show
from fhcalc.syntax import (
    INT,
    ActiveCheck,
    App,
    Blame,
    Cast,
    Const,
    Lam,
    Op,
    Refine,
    Var,
    WaitCheck,
    alpha_eq,
)


def test_cast_application():
    e = parse_term("<Int => {x:Int | 0 < x}>^l 5")
    assert e == App(Cast(INT, Refine("x", INT, Op("lt", (Const(0), Var("x")))), "l"), Const(5))


def test_runtime_forms():
    w = parse_term("<<{x:Int | x > 0}, 1 + 1>>^l")
    assert isinstance(w, WaitCheck) and w.label == "l"
    a = parse_term("<{x:Int | x > 0}, 2 > 0, 2>^l")
    assert isinstance(a, ActiveCheck) and a.value == Const(2)
    assert isinstance(parse_term("blame m"), Blame)


def test_let_is_sugar_for_application():
    e = parse_term("let x:Int = 1 in x + 1")
    assert e == App(Lam("x", INT, parse_term("x + 1")), Const(1))


def test_infix_precedence():
    assert parse_term("1 + 2 * 3 > 4 && true") == parse_term("((1 + (2 * 3)) > 4) && true")
    assert parse_term("f x y") == App(App(Var("f"), Var("x")), Var("y"))


def test_negative_literals():
    assert parse_term("(-1)") == Const(-1)
    assert str(Const(-1)) == "(-1)"


def test_types():
    assert parse_type("(x:Int) -> {y:Int | y > x}").var == "x"
    assert parse_type("forall a. a -> a") == parse_type("forall a. (a -> a)")
    with pytest.raises(ParseError):
        parse_type("{x:Int | }")


@pytest.mark.parametrize("text", ["((", "fun (x) x", "<Int => Int> 5", "1 +", "let x = 1 in x", "5 5 )"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_term(text)


def test_unknown_operation_name_reads_as_a_variable():
    assert parse_term("frobnicate(1)") == App(Var("frobnicate"), Const(1))


def test_context_block_and_flag():
    src = parse_file("context { n : {x:Int | x > 0}; type a; }\nn")
    assert src.context.lookup("n") == parse_type("{x:Int | x > 0}")
    assert src.context.tvars() == ["a"]
    ctx = parse_context("x : Int; type b")
    assert ctx.lookup("x") == INT and ctx.tvars() == ["b"]


def test_signature_block_extends_operations():
    src = parse_file("signature { half : (n:Int) -> Int by table { (4) -> 2, _ -> 0 }; }\nhalf(4)")
    assert "half" in src.signature
    again = parse_file(show_file(src))
    assert again.term == src.term and "half" in again.signature


def test_corpus_round_trip(corpus):
    for prog in corpus:
        printed = show_file(prog.source)
        again = parse_file(printed)
        assert alpha_eq(again.term, prog.term), prog.name
        assert show_file(again) == printed, prog.name


def test_generated_round_trip():
    rng = random.Random(1)
    done = 0
    while done < 1000:
        got = gen_typed_term(rng, rng.randint(1, 10))
        if got is None:
            continue
        e, ty = got
        assert alpha_eq(parse_term(show(e)), e), show(e)
        assert alpha_eq(parse_type(show(ty)), ty), show(ty)
        done += 1
