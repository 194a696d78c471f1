import json
import subprocess
import sys
from pathlib import Path

import pytest

from fhcalc.cli import FAILURE, INCONCLUSIVE, OK, USAGE, main
import fhcalc.corpus

CORPUS_DIR = Path(fhcalc.corpus.__file__).parent


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return _write


def test_check(capsys, write):
    code, out, _ = run(["check", str(CORPUS_DIR / "fun_cast.fh")], capsys)
    assert code == OK and "->" in out
    code, out, _ = run(["check", write("bad.fh", "<Int => Bool>^l 1")], capsys)
    assert code == FAILURE and "IncompatibleCast" in out


def test_eval(capsys):
    code, out, _ = run(["eval", str(CORPUS_DIR / "prime_cast.fh")], capsys)
    assert code == OK and out.strip() == "blame l"
    code, out, _ = run(["eval", str(CORPUS_DIR / "prime_cast_5.fh")], capsys)
    assert out.strip() == "5"


def test_eval_exit_codes(capsys, write):
    assert run(["eval", write("stuck.fh", "1 + true")], capsys)[0] == FAILURE
    loop = write("long.fh", "(fun (x:Int) x) ((fun (x:Int) x) 1)")
    assert run(["eval", "--fuel", "1", loop], capsys)[0] == INCONCLUSIVE
    assert run(["eval", str(CORPUS_DIR / "open_upcast.fh")], capsys)[0] == USAGE


def test_eval_trace(capsys, write):
    code, out, _ = run(["eval", "--trace", write("t.fh", "<Int => Int>^l 3")], capsys)
    assert out.splitlines() == ["   <Int => Int>^l 3", "-> 3", "=> 3"]


def test_optimize_output_parses(capsys, write):
    code, out, _ = run(["optimize", str(CORPUS_DIR / "stack.fh")], capsys)
    assert code == OK
    assert any(line.startswith("# ") for line in out.splitlines())
    # rewritten programs may be semityped, so only ask that they parse and run
    again = write("opt.fh", out)
    code, out, _ = run(["eval", again], capsys)
    assert code == OK and out.strip() == "0"


def test_optimize_options(capsys):
    path = str(CORPUS_DIR / "bool_upcast.fh")
    assert run(["optimize", "--passes", "nonsense", path], capsys)[0] == USAGE
    assert run(["optimize", "--prover", "magic", path], capsys)[0] == USAGE
    code, out, _ = run(["optimize", "--passes", "reflexive", path], capsys)
    assert code == OK and "UpcastElim" not in out


def test_difftest(capsys, write, tmp_path):
    left = write("l.fh", "<Int => {x:Int | x > 0}>^l")
    right = write("r.fh", "fun (x:Int) x")
    report = tmp_path / "w.jsonl"
    code, out, _ = run(["difftest", left, right, "--trials", "60", "--report", str(report)], capsys)
    assert code == FAILURE and "differ" in out
    recs = [json.loads(line) for line in report.read_text().splitlines()]
    assert recs and all("outcome1" in r for r in recs)
    assert run(["difftest", left, left, "--trials", "30"], capsys)[0] == OK


def test_difftest_with_context_and_type(capsys, write):
    left = write("l.fh", "<{x:Int | x > 3} => {x:Int | x > 0}>^l n")
    right = write("r.fh", "n")
    args = ["difftest", left, right, "--ctx", "n : {x:Int | x > 3}", "--type", "{x:Int | x > 0}", "--trials", "30"]
    code, out, _ = run(args, capsys)
    assert code == OK, out
    assert run(["difftest", left, right, "--ctx", "n : {x:Int |"], capsys)[0] == USAGE


def test_quickcheck(capsys):
    code, out, _ = run(["quickcheck", "--suite", "soundness", "--trials", "20"], capsys)
    assert code == OK and out.startswith("soundness: ok")


def test_usage_errors(capsys, tmp_path):
    assert run(["check", str(tmp_path / "missing.fh")], capsys)[0] == USAGE
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == USAGE
    with pytest.raises(SystemExit) as err:
        main(["quickcheck", "--suite", "nope"])
    assert err.value.code == USAGE


def test_parse_error_exits_3(capsys, write):
    code, _, err = run(["check", write("bad.fh", "((")], capsys)
    assert code == USAGE and "error" in err


def test_module_entry_point():
    got = subprocess.run([sys.executable, "-m", "fhcalc", "eval", str(CORPUS_DIR / "cast_pos.fh")], capture_output=True, text=True)
    assert got.returncode == 0 and got.stdout.strip()
