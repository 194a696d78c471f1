"""Walk through how fussy casts behave on a few small programs.

Run with ``python demos/fussy_casts.py``.
"""

from fhcalc import evaluate, parse_term, trace
from fhcalc.semantics import show_outcome


def show_run(src: str) -> None:
    print(src)
    for i, state in enumerate(trace(parse_term(src))):
        print(("   " if i == 0 else "-> ") + str(state))
    print("=>", show_outcome(evaluate(parse_term(src))))
    print()


# A checking cast: 5 passes the refinement, so the run yields 5.
show_run("<Int => {x:Int | 0 < x}>^l 5")

# Casts never assume the source refinement. 2 is prime, yet the cast still
# checks 2 > 2 and blames l.
show_run("<{x:Int | prime?(x)} => {x:Int | x > 2}>^l (<Int => {x:Int | prime?(x)}>^p 2)")

# A reflexive cast still checks its refinement, and an unsatisfiable one
# always blames.
show_run("<{x:Int | not(true)} => {x:Int | not(true)}>^l 5")

# Nested refinements are checked from the inside out, so the trace holds
# two waiting checks at once.
show_run("<{x:Int | prime?(x)} => {y:{x:Int | prime?(x)} | y > 2}>^l 5")
