"""The bounded explicit-state oracle, on its own.

Everything here enumerates bounded markings and runs breadth-first
search; no solver involved. Counterexamples are real, "ok" means none
within the bound.
"""

from pathlib import Path

from polyabs import load_rule
from polyabs.oracle import (Bound, check_coherency, check_instantiation,
                            reachability_matches_constraint, silent_reach)

RULES = Path(__file__).resolve().parent.parent / "rules"
bound = Bound(max_tokens=6, max_depth=8)

concat = load_rule(RULES / "concat")
fake = load_rule(RULES / "fake_concat")

print("silent closure of (y1=2, y2=0):",
      sorted(silent_reach(concat.n1, {"y1": 2, "y2": 0}, bound).markings))

print("concat coherent?", check_coherency(concat.n1, concat.c1, bound).ok)
out = check_coherency(fake.n1, fake.c1, bound)
print("fake_concat coherent?", out.ok, "| counterexample:",
      out.counterexample)

# Instantiating the rule at concrete markings: (y1=2, y2=0) vs (x=2).
print("concat instance (2,0) ~ (x=2):",
      check_instantiation(concat.facts(), {"y1": 2, "y2": 0}, {"x": 2},
                          Bound(max_tokens=4, max_depth=3)).ok)
print("fake instance (2,0) ~ (x=2):",
      check_instantiation(fake.facts(), {"y1": 2, "y2": 0}, {"x": 2},
                          Bound(max_tokens=4, max_depth=2)))

# For the swimming pool against the empty net, soundness means exactly:
# the reachable markings are the solutions of the linking constraint.
pool = load_rule(RULES / "pool_small")
print("pool reachability = solutions of E?",
      reachability_matches_constraint(pool.n1, pool.c1, pool.e, bound).ok)
