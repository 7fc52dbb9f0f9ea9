"""Automated prover for polyhedral-abstraction equivalences of Petri nets.

The package checks candidate equivalences between two parametric nets
linked by a linear constraint: it compiles the defining requirements to
quantified linear-integer-arithmetic queries, discharges them with an
external SMT solver, and independently certifies the silent-reachability
predicates built from flat acceleration certificates.
"""

from .net import (PetriNet, hurdle_delta, power_hurdle_delta, positive_part,
                  synchronous_product, isomorphic_fixed_places)
from .formula import (Formula, LinTerm, eval_formula, substitute, free_vars,
                      models_within_bound, build_linking_formula,
                      UnboundedQuantifier)
from .parser import parse_formula, ParseError
from .encode import (LabelCoding, RuleEncoding, CoreQuery, CertificateTauStar,
                     LinkingTauStar, core_queries)
from .accel import FlatCertificate, AccelParams, search_certificate, certify
from .solver import (SolverConfig, SolverVerdict, emit_validity_script, run,
                     check_validity, SolverUnavailable)
from .loader import load_rule, parse_net, ReductionRule
from .pipeline import check_rule, CheckOptions, Verdict, report

__all__ = [
    "PetriNet", "hurdle_delta", "power_hurdle_delta", "positive_part",
    "synchronous_product", "isomorphic_fixed_places",
    "Formula", "LinTerm", "eval_formula", "substitute", "free_vars",
    "models_within_bound", "build_linking_formula", "UnboundedQuantifier",
    "parse_formula", "ParseError",
    "LabelCoding", "RuleEncoding", "CoreQuery", "CertificateTauStar",
    "LinkingTauStar", "core_queries",
    "FlatCertificate", "AccelParams", "search_certificate", "certify",
    "SolverConfig", "SolverVerdict", "emit_validity_script", "run",
    "check_validity", "SolverUnavailable",
    "load_rule", "parse_net", "ReductionRule",
    "check_rule", "CheckOptions", "Verdict", "report",
]
