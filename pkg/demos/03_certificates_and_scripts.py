"""Certificate search, certification, and the emitted solver scripts.

Needs a solver (see README).
"""

from pathlib import Path

from polyabs import SolverConfig, check_validity, emit_validity_script, load_rule
from polyabs.accel import AccelParams, certify, search_certificate
from polyabs.encode import CertificateTauStar, closure_query

RULES = Path(__file__).resolve().parent.parent / "rules"

rule = load_rule(RULES / "concat")
enc = rule.encoding()
config = SolverConfig.default(timeout_ms=30000)
runner = lambda query, timeout_ms=None: check_validity(query, config)

# The search grows a list of silent sequences until one more silent step
# can no longer escape the coverage (the closure query becomes valid).
result = search_certificate(enc, 1, AccelParams(), runner)
print("found certificate:", result.certificate)

# Certification re-establishes the claim: reflexivity and closure are
# mandatory, agreement with the linking-derived predicate is a bonus that
# unlocks a cheaper encoding.
outcome = certify(enc, 1, result.certificate, runner)
print("certification:", outcome.status,
      "| agreement:", outcome.agreement.status)

# Every check is one deterministic SMT-LIB script: the query's negation
# over free natural constants, so sat answers carry countermodels.
tau = CertificateTauStar(enc.n1, result.certificate.sequences)
print()
print(emit_validity_script(closure_query(enc, 1, tau)))
