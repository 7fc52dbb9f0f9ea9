"""Full checks of a sound and an unsound fixture rule.

Needs a solver (see README); takes roughly half a minute.
"""

from pathlib import Path

from polyabs import CheckOptions, SolverConfig, check_rule, load_rule, report

RULES = Path(__file__).resolve().parent.parent / "rules"

options = CheckOptions(solver=SolverConfig.default(timeout_ms=30000))

# concat fuses two places linked by a silent transition into one place,
# sound as long as nothing can inject tokens into the downstream place.
rule = load_rule(RULES / "concat")
print(report(check_rule(rule, options)))
print()

# fake_concat adds exactly such an injecting transition (label d): the
# initial net stops being coherent and the checker pinpoints it.
rule = load_rule(RULES / "fake_concat")
print(report(check_rule(rule, options)))
