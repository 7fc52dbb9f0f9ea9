from polyabs import formula as F
from polyabs.encode import CoreQuery
from polyabs.formula import eval_formula
from polyabs.parser import parse_formula
from polyabs.solver import (SolverConfig, check_validity,
                            emit_validity_script, formula_to_smt,
                            outer_universals, parse_model, run, term_to_smt)

from conftest import stub_command


def closed(kind, text) -> CoreQuery:
    f = parse_formula(text)
    return CoreQuery(kind, "net1", F.forall(sorted(F.free_vars(f)), f),
                     "none")


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def test_term_emission():
    t = F.var("x").scale(2) + F.var("y").scale(-1) + F.const(-3)
    assert term_to_smt(t) == "(+ (* 2 x) (* (- 1) y) (- 3))"
    assert term_to_smt(F.const(0)) == "0"
    assert term_to_smt(F.var("x")) == "x"


def test_formula_emission_quantifier_guards():
    f = F.Exists(("k",), F.Cmp("=", F.var("k"), F.var("y")))
    assert formula_to_smt(f) == \
        "(exists ((k Int)) (and (>= k 0) (= k y)))"
    g = F.Forall(("k", "j"), F.TRUE)
    assert formula_to_smt(g) == \
        "(forall ((k Int) (j Int)) (=> (and (>= k 0) (>= j 0)) true))"


def test_emit_script_shape():
    q = closed("core1", "x >= 1")
    script = emit_validity_script(q)
    lines = script.splitlines()
    assert lines[0].startswith("; core1 net1")
    assert "(set-logic LIA)" in lines
    assert "(declare-const x Int)" in lines
    assert "(assert (>= x 0))" in lines
    assert "(assert (not (>= x 1)))" in lines
    assert lines[-2] == "(check-sat)"
    assert lines[-1] == "(get-model)"


def test_emit_script_byte_deterministic():
    q1 = closed("core2", "x + y >= 1 or y = 0")
    q2 = closed("core2", "x + y >= 1 or y = 0")
    assert emit_validity_script(q1) == emit_validity_script(q2)


def test_outer_universals_stripping():
    f = F.forall(("a", "b"), F.forall(("c",), F.ge(F.var("a"), 0)))
    names, body = outer_universals(f)
    assert names == ("a", "b", "c")
    assert body == F.ge(F.var("a"), 0)


# ---------------------------------------------------------------------------
# Model parsing
# ---------------------------------------------------------------------------

def test_parse_model_multiline_and_negative():
    text = """(
  (define-fun m0.y1 () Int
    3)
  (define-fun a () Int (- 2))
  (define-fun helper ((z Int)) Int 0)
)"""
    model = parse_model(text)
    assert model == {"m0.y1": 3, "a": -2}


def test_parse_model_absent():
    assert parse_model("(error \"model is not available\")") is None
    assert parse_model("") is None


# ---------------------------------------------------------------------------
# Driver against stub solvers
# ---------------------------------------------------------------------------

def test_run_stub_unsat_is_valid():
    config = SolverConfig.from_command(stub_command("unsat"))
    verdict = run("(check-sat)", config)
    assert verdict.is_valid


def test_run_stub_unknown():
    config = SolverConfig.from_command(stub_command("unknown"))
    verdict = run("(check-sat)", config)
    assert verdict.status == "unknown"
    assert verdict.reason == "solver-unknown"


def test_run_stub_sat_without_model_is_process_error():
    config = SolverConfig.from_command(stub_command("sat-empty"))
    verdict = run("(check-sat)", config)
    assert verdict.status == "unknown"
    assert verdict.reason == "process-error"


def test_run_stub_garbage_is_process_error():
    config = SolverConfig.from_command(stub_command("garbage"))
    verdict = run("(check-sat)", config)
    assert verdict.status == "unknown"
    assert verdict.reason == "process-error"


def test_run_missing_binary_is_process_error():
    config = SolverConfig(("definitely-not-a-solver-k2h4",), 1000)
    verdict = run("(check-sat)", config)
    assert verdict.status == "unknown"
    assert verdict.reason == "process-error"


# ---------------------------------------------------------------------------
# Driver against the real solver
# ---------------------------------------------------------------------------

def test_valid_query(solver_config):
    q = closed("core1", "true")
    assert check_validity(q, solver_config).is_valid


def test_invalid_query_yields_countermodel(solver_config):
    q = closed("core1", "x >= 1")
    verdict = check_validity(q, solver_config)
    assert verdict.is_invalid
    assert verdict.countermodel == {"x": 0}


def test_countermodel_falsifies_query(solver_config):
    q = closed("core1", "x + y >= 1 or x >= 2")
    verdict = check_validity(q, solver_config)
    assert verdict.is_invalid
    _, body = outer_universals(q.formula)
    assert not eval_formula(body, verdict.countermodel, quantifier_bound=8)


def test_quantified_query(solver_config):
    # Every natural is even or odd: valid in the naturals.
    q = closed("core1",
               "(exists k. x = 2*k) or (exists k. x = 2*k + 1)")
    assert check_validity(q, solver_config).is_valid


def test_timeout_reported(solver_config):
    config = SolverConfig(solver_config.command, 1, solver_config.env)
    q = closed("core1", "true")
    verdict = check_validity(q, config)
    assert verdict.status == "unknown"
    assert verdict.reason == "timeout"


def test_default_config_resolution(solver_config):
    assert solver_config.command
    assert solver_config.timeout_ms == 60000
