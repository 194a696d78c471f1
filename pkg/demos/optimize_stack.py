"""Optimize the shipped stack program and confirm the result behaves the same.

Run with ``python demos/optimize_stack.py``.
"""

from fhcalc.corpus import load
from fhcalc.harness import ciu_test
from fhcalc.optimizer import count_casts, optimize
from fhcalc.semantics import evaluate, show_outcome
from fhcalc.typesystem import typecheck

prog = load("stack")
ty = typecheck(prog.context, prog.term, prog.signature)
out, log = optimize(prog.context, prog.term, sig=prog.signature)

print("before:", prog.term)
print("after: ", out)
print(f"casts: {count_casts(prog.term)} -> {count_casts(out)}")
print()
print(log.report())
print()
print("result before:", show_outcome(evaluate(prog.term, sig=prog.signature)))
print("result after: ", show_outcome(evaluate(out, sig=prog.signature)))
print(ciu_test(prog.context, ty, prog.term, out, trials=50, sig=prog.signature, name="stack").text())
