"""Command line front end: ``fh check | eval | optimize | difftest | quickcheck``.

Exit codes: 0 success or equal, 1 definite failure or witness found,
2 inconclusive, 3 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .optimizer import PASSES, optimize
from .parser import ParseError, SourceFile, parse_context, parse_file, parse_type, show_file
from .semantics import DEFAULT_FUEL, Blamed, FuelExhausted, Stuck, Value, evaluate, show_outcome, trace
from .subtyping import DEFAULT_CONFIG, TACTICS
from .typesystem import FhTypeError, typecheck, validate_signature

OK, FAILURE, INCONCLUSIVE, USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str) -> SourceFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from err
    try:
        return parse_file(text)
    except ParseError as err:
        raise UsageError(f"{path}: {err}") from err


def _csv(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def cmd_check(args) -> int:
    src = _load(args.file)
    problems = validate_signature(src.signature) if src.declared_ops else []
    for p in problems:
        print(f"signature: {p}")
    try:
        ty = typecheck(src.context, src.term, src.signature)
    except FhTypeError as err:
        print(f"error: {err}")
        return FAILURE
    print(ty)
    return FAILURE if problems else OK


def cmd_eval(args) -> int:
    src = _load(args.file)
    if len(src.context):
        raise UsageError("eval needs a closed program (the file declares a context)")
    if args.trace:
        states = trace(src.term, args.fuel, src.signature)
        for i, t in enumerate(states):
            print(("   " if i == 0 else "-> ") + str(t))
    out = evaluate(src.term, args.fuel, src.signature)
    print(("=> " if args.trace else "") + show_outcome(out))
    match out:
        case Value() | Blamed():
            return OK
        case Stuck():
            return FAILURE
        case FuelExhausted():
            return INCONCLUSIVE
    return FAILURE


def cmd_optimize(args) -> int:
    src = _load(args.file)
    passes = _csv(args.passes) if args.passes else list(PASSES)
    cfg = DEFAULT_CONFIG
    try:
        if args.prover is not None:
            cfg = cfg.with_tactics(_csv(args.prover))
        typecheck(src.context, src.term, src.signature)
        out, log = optimize(src.context, src.term, passes, src.signature, cfg, forget=not args.no_forget)
    except ValueError as err:
        raise UsageError(str(err)) from err
    except FhTypeError as err:
        print(f"error: {err}")
        return FAILURE
    # the log goes out as comments so the output parses as a source file
    for line in log.report().splitlines():
        print(f"# {line}")
    print(show_file(SourceFile(out, src.context, src.signature, src.declared_ops)), end="")
    return OK


def cmd_difftest(args) -> int:
    left, right = _load(args.file1), _load(args.file2)
    sig = left.signature
    try:
        ctx = parse_context(args.ctx, sig) if args.ctx is not None else left.context
        ty = parse_type(args.type, sig) if args.type is not None else None
    except ParseError as err:
        raise UsageError(str(err)) from err
    try:
        actual = typecheck(ctx, left.term, sig)
    except FhTypeError as err:
        print(f"error: left program: {err}")
        return FAILURE
    if ty is None:
        ty = actual
    rep = harness.ciu_test(ctx, ty, left.term, right.term, args.trials, args.fuel, args.seed, sig, name=f"{args.file1} vs {args.file2}")
    print(rep.text())
    if args.report:
        Path(args.report).write_text(rep.jsonl() + ("\n" if rep.witnesses else ""), encoding="utf-8")
    return {"differ": FAILURE, "equal": OK}.get(rep.status, INCONCLUSIVE)


SUITE_TRIALS = {"soundness": 500, "coterm": 300, "decomp": 200, "laws": 200}


def cmd_quickcheck(args) -> int:
    trials = args.trials if args.trials is not None else SUITE_TRIALS[args.suite]
    res = harness.SUITES[args.suite](trials, args.seed, args.fuel)
    print(res.text())
    if not res.ok:
        return FAILURE
    return OK if res.checked else INCONCLUSIVE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fh", description="Manifest contracts with fussy casts: checker, evaluator, optimizer and differential tester.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="typecheck a program and print its type")
    c.add_argument("file")
    c.set_defaults(run=cmd_check)

    e = sub.add_parser("eval", help="evaluate a closed program")
    e.add_argument("file")
    e.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    e.add_argument("--trace", action="store_true", help="print every reduction step")
    e.set_defaults(run=cmd_eval)

    o = sub.add_parser("optimize", help="eliminate redundant casts and print the result with its rewrite log")
    o.add_argument("file")
    o.add_argument("--passes", help=f"comma separated subset of {','.join(PASSES)}")
    o.add_argument("--prover", help=f"comma separated prover tactics from {','.join(TACTICS)}")
    o.add_argument("--no-forget", action="store_true", help="do not drop provable source refinements")
    o.set_defaults(run=cmd_optimize)

    d = sub.add_parser("difftest", help="CIU-test FILE2 against the well-typed FILE1")
    d.add_argument("file1")
    d.add_argument("file2")
    d.add_argument("--trials", type=int, default=harness.DEFAULT_TRIALS)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    d.add_argument("--ctx", help="typing context, e.g. 'x : {y:Int | y > 0}; type a'")
    d.add_argument("--type", help="type at which to compare (defaults to FILE1's type)")
    d.add_argument("--report", metavar="PATH", help="write one JSON record per witness")
    d.set_defaults(run=cmd_difftest)

    q = sub.add_parser("quickcheck", help="run a property suite")
    q.add_argument("--suite", required=True, choices=sorted(harness.SUITES))
    q.add_argument("--trials", type=int)
    q.add_argument("--seed", type=int, default=42)
    q.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    q.set_defaults(run=cmd_quickcheck)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except UsageError as err:
        print(f"fh: error: {err}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
