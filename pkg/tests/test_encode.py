from itertools import product

import pytest

from polyabs import formula as F
from polyabs.encode import (CertificateTauStar, EncodingError,
                            LabelCoding, NameGen, RuleEncoding, VarVec,
                            coherence_query, core_queries, displacement,
                            enabledness, enlargement_probe, labeled_step,
                            silent_step, silent_then_label, simulation_query,
                            solvability_query, stability_query,
                            step_with_settling, closure_query,
                            reflexivity_query, agreement_query)
from polyabs.formula import build_linking_formula, eval_formula, free_vars
from polyabs.net import PetriNet
from polyabs.oracle import Bound, silent_reach
from polyabs.parser import parse_formula
from polyabs.solver import emit_validity_script

from conftest import concat_initial, concat_reduced, fake_concat_initial

QB = 16  # quantifier enumeration bound for formula evaluation


def concat_encoding(n1=None) -> RuleEncoding:
    n1 = n1 or concat_initial()
    n2 = concat_reduced()
    e_tilde = build_linking_formula(parse_formula("x = y1 + y2"),
                                    n1.places, n2.places)
    return RuleEncoding(n1, n2, parse_formula("y2 = 0"), F.TRUE, e_tilde,
                        LabelCoding.over(n1, n2))


def vec(prefix: str, net: PetriNet) -> VarVec:
    return VarVec(prefix, net.places)


def env_of(x: VarVec, m: dict) -> dict:
    return {x.name(p): v for p, v in m.items()}


# ---------------------------------------------------------------------------
# One-step relations against actual firing
# ---------------------------------------------------------------------------

def test_enabledness_structure():
    net = concat_initial()
    f = enabledness(net, "t", vec("u.", net))
    assert str(f) == "(u.y1 >= 1) and (u.y2 >= 0)"


def test_displacement_structure():
    net = concat_initial()
    f = displacement(net, "t", vec("u.", net), vec("v.", net))
    assert eval_formula(f, {"u.y1": 3, "u.y2": 0, "v.y1": 2, "v.y2": 1})
    assert not eval_formula(f, {"u.y1": 3, "u.y2": 0, "v.y1": 3, "v.y2": 1})


def test_displacement_identity_for_loop():
    net = PetriNet(("p",), ("t",), {"t": {"p": 1}}, {"t": {"p": 1}},
                   {"t": None})
    f = displacement(net, "t", vec("u.", net), vec("v.", net))
    assert eval_formula(f, {"u.p": 4, "v.p": 4})


def test_labeled_step_matches_firing():
    net = concat_reduced()
    coding = LabelCoding.over(net)
    x, x2 = vec("u.", net), vec("v.", net)
    f = labeled_step(net, coding, x, x2, "a")
    assert eval_formula(f, {"u.x": 1, "v.x": 0, "a": coding.code("b")})
    assert not eval_formula(f, {"u.x": 0, "v.x": 1, "a": coding.code("b")})
    # code 0 is reserved for silence and never fires an observable step
    for ux, vx in product(range(3), repeat=2):
        assert not eval_formula(f, {"u.x": ux, "v.x": vx, "a": 0})


def test_labeled_step_exhaustive_against_fire():
    net = fake_concat_initial()
    coding = LabelCoding.over(net)
    x, x2 = vec("u.", net), vec("v.", net)
    f = labeled_step(net, coding, x, x2, "a")
    for m_vals in product(range(3), repeat=2):
        m = dict(zip(net.places, m_vals))
        for m2_vals in product(range(4), repeat=2):
            m2 = dict(zip(net.places, m2_vals))
            for code in range(0, coding.size + 1):
                expected = any(
                    net.fire(m, t) == m2
                    and coding.code(net.label[t]) == code
                    for t in net.observable_transitions())
                env = {**env_of(x, m), **env_of(x2, m2), "a": code}
                assert eval_formula(f, env) == expected


def test_silent_step_matches_firing():
    net = concat_initial()
    f = silent_step(net, vec("u.", net), vec("v.", net))
    assert eval_formula(f, {"u.y1": 2, "u.y2": 0, "v.y1": 1, "v.y2": 1})
    assert not eval_formula(f, {"u.y1": 0, "u.y2": 0, "v.y1": 0, "v.y2": 1})


def test_silent_step_empty_when_no_silent_transitions():
    net = concat_reduced()
    assert silent_step(net, vec("u.", net), vec("v.", net)) == F.FALSE


# ---------------------------------------------------------------------------
# Certificate predicate
# ---------------------------------------------------------------------------

def test_tau_star_empty_certificate_is_identity():
    net = concat_initial()
    tau = CertificateTauStar(net, ())
    f = tau.at(vec("u.", net), vec("v.", net), NameGen())
    assert eval_formula(f, {"u.y1": 2, "u.y2": 1, "v.y1": 2, "v.y2": 1})
    assert not eval_formula(f, {"u.y1": 2, "u.y2": 1, "v.y1": 1, "v.y2": 2})


def test_tau_star_rejects_observable_sequences():
    net = concat_initial()
    with pytest.raises(EncodingError):
        CertificateTauStar(net, (("b",),))
    with pytest.raises(EncodingError):
        CertificateTauStar(net, ((),))
    with pytest.raises(EncodingError):
        CertificateTauStar(net, (("ghost",),))


def test_tau_star_single_sequence_models_match_bfs():
    # Models of the predicate = silent BFS reachability, for every start
    # with y1 <= 6, y2 = 0.
    net = concat_initial()
    tau = CertificateTauStar(net, (("t",),))
    x, x2 = vec("u.", net), vec("v.", net)
    f = tau.at(x, x2, NameGen())
    bound = Bound(max_tokens=6)
    for y1 in range(7):
        m = {"y1": y1, "y2": 0}
        reach = silent_reach(net, m, bound)
        for target_vals in product(range(7), repeat=2):
            target = dict(zip(net.places, target_vals))
            env = {**env_of(x, m), **env_of(x2, target)}
            assert eval_formula(f, env, quantifier_bound=QB) == \
                (target_vals in reach.markings)


def test_tau_star_reflexive_by_zero_counters():
    net = fake_concat_initial()
    tau = CertificateTauStar(net, (("t",),))
    f = tau.at(vec("u.", net), vec("v.", net), NameGen())
    for vals in product(range(3), repeat=2):
        m = dict(zip(net.places, vals))
        env = {**env_of(vec("u.", net), m), **env_of(vec("v.", net), m)}
        assert eval_formula(f, env, quantifier_bound=QB)


def test_tau_star_free_variables_are_the_two_vectors():
    net = concat_initial()
    tau = CertificateTauStar(net, (("t",), ("t", "t")))
    f = tau.at(vec("u.", net), vec("v.", net), NameGen())
    assert free_vars(f) == {"u.y1", "u.y2", "v.y1", "v.y2"}


def test_tau_star_two_blocks_compose():
    # p0 --s--> p1 --w--> p2: blocks (s)* then (w)* reach p2 only in order.
    net = PetriNet(("p0", "p1", "p2"), ("s", "w"),
                   {"s": {"p0": 1}, "w": {"p1": 1}},
                   {"s": {"p1": 1}, "w": {"p2": 1}},
                   {"s": None, "w": None})
    tau = CertificateTauStar(net, (("s",), ("w",)))
    x, x2 = vec("u.", net), vec("v.", net)
    f = tau.at(x, x2, NameGen())

    def ok(src, dst):
        env = {**env_of(x, dict(zip(net.places, src))),
               **env_of(x2, dict(zip(net.places, dst)))}
        return eval_formula(f, env, quantifier_bound=QB)

    assert ok((2, 0, 0), (0, 1, 1))   # s s w
    assert ok((2, 0, 0), (0, 2, 0))   # s s
    assert ok((1, 1, 0), (0, 0, 2))   # s w w
    assert ok((2, 0, 0), (1, 0, 1))   # s w
    assert not ok((2, 0, 0), (2, 0, 1))  # w alone: its block input is empty
    # Block order matters: with (w)* before (s)*, "s then w" is uncovered.
    swapped = CertificateTauStar(net, (("w",), ("s",)))
    g = swapped.at(x, x2, NameGen())
    env = {**env_of(x, dict(zip(net.places, (2, 0, 0)))),
           **env_of(x2, dict(zip(net.places, (1, 0, 1))))}
    assert not eval_formula(g, env, quantifier_bound=QB)


# ---------------------------------------------------------------------------
# Silent-then-label and bracketed step against BFS
# ---------------------------------------------------------------------------

def concat_tleft():
    enc = concat_encoding()
    net = enc.n1
    tau = CertificateTauStar(net, (("t",),))
    gen = NameGen()
    x, x2 = vec("m0.", net), vec("m1.", net)
    return enc, net, tau, x, x2, silent_then_label(enc, 1, tau, x, x2, "a",
                                                   gen)


def test_silent_then_label_matches_bfs():
    from polyabs.oracle import silent_then_label as bfs_stl
    enc, net, tau, x, x2, f = concat_tleft()
    bound = Bound(max_tokens=4)
    code_b = enc.coding.code("b")
    for m_vals in product(range(4), repeat=2):
        m = dict(zip(net.places, m_vals))
        expected, _ = bfs_stl(net, m, "b", bound)
        for target_vals in product(range(4), repeat=2):
            env = {**env_of(x, m),
                   **env_of(x2, dict(zip(net.places, target_vals))),
                   "a": code_b}
            assert eval_formula(f, env, quantifier_bound=QB) == \
                (target_vals in expected)


def test_silent_then_label_unreachable():
    enc, net, tau, x, x2, f = concat_tleft()
    env = {"m0.y1": 0, "m0.y2": 0, "m1.y1": 0, "m1.y2": 0,
           "a": enc.coding.code("b")}
    assert not eval_formula(f, env, quantifier_bound=QB)


def test_step_with_settling_examples():
    enc = concat_encoding()
    net = enc.n1
    tau = CertificateTauStar(net, (("t",),))
    x, x2 = vec("m0.", net), vec("m1.", net)
    f = step_with_settling(enc, 1, tau, x, x2, "a", NameGen())
    # silent only: a = 0, x2 silently reachable
    assert eval_formula(f, {"m0.y1": 2, "m0.y2": 0, "m1.y1": 2, "m1.y2": 0,
                            "a": 0}, quantifier_bound=QB)
    # (2,0) --t--> (1,1) --b--> (1,0) --t--> (0,1): intermediate (1,0)
    # satisfies the constraint, so the bracketed step accepts it.
    assert eval_formula(f, {"m0.y1": 2, "m0.y2": 0, "m1.y1": 0, "m1.y2": 1,
                            "a": enc.coding.code("b")}, quantifier_bound=QB)
    assert not eval_formula(f, {"m0.y1": 0, "m0.y2": 0, "m1.y1": 0,
                                "m1.y2": 0, "a": enc.coding.code("b")},
                            quantifier_bound=QB)


def test_linked_constraint_triples():
    enc = concat_encoding()
    x, y = vec("m0.", enc.n1), vec("m1.", enc.n2)
    cec = F.conj(enc.constraint_at(1, x), enc.link_at(x, y),
                 enc.constraint_at(2, y))
    assert eval_formula(cec, {"m0.y1": 2, "m0.y2": 0, "m1.x": 2})
    assert not eval_formula(cec, {"m0.y1": 1, "m0.y2": 1, "m1.x": 2})
    assert not eval_formula(cec, {"m0.y1": 2, "m0.y2": 0, "m1.x": 1})


# ---------------------------------------------------------------------------
# Label coding and query structure
# ---------------------------------------------------------------------------

def test_label_coding_alphabetical():
    coding = LabelCoding.over(concat_initial(), concat_reduced())
    assert coding.symbols == ("a", "b")
    assert coding.code("a") == 1
    assert coding.code("b") == 2
    assert coding.code(None) == 0
    assert coding.symbol(2) == "b"
    with pytest.raises(EncodingError):
        coding.code("zzz")


def test_all_queries_are_closed():
    enc = concat_encoding()
    tau1 = CertificateTauStar(enc.n1, (("t",),))
    tau2 = CertificateTauStar(enc.n2, ())
    queries = core_queries(enc, tau1, tau2)
    assert len(queries) == 8
    for q in queries:
        assert free_vars(q.formula) == set()
    for builder in (reflexivity_query, closure_query, agreement_query):
        assert free_vars(builder(enc, 1, tau1).formula) == set()


def test_query_emission_deterministic():
    def build():
        enc = concat_encoding()
        tau1 = CertificateTauStar(enc.n1, (("t",),))
        tau2 = CertificateTauStar(enc.n2, ())
        return [emit_validity_script(q)
                for q in core_queries(enc, tau1, tau2)]

    assert build() == build()


def test_empty_net_queries_degenerate():
    empty = PetriNet((), (), {}, {}, {})
    n1 = concat_initial()
    e = parse_formula("y1 >= 0")
    e_tilde = build_linking_formula(e, n1.places, ())
    enc = RuleEncoding(n1, empty, F.TRUE, F.TRUE, e_tilde,
                       LabelCoding.over(n1, empty))
    tau2 = CertificateTauStar(empty, ())
    q = coherence_query(enc, 2, tau2)
    assert q.formula == F.TRUE  # no observable transition can fire
    tau1 = CertificateTauStar(n1, (("t",),))
    for q in core_queries(enc, tau1, tau2):
        assert free_vars(q.formula) == set()


def test_enlargement_probe_detects_escape():
    enc = concat_encoding()
    tau_empty = CertificateTauStar(enc.n1, ())
    probe = enlargement_probe(enc, 1, tau_empty, ("t",))
    # The negated body is satisfied by the escape (1,0) -t-> (0,1).
    names_env = {"m0.y1": 1, "m0.y2": 0, "m1.y1": 1, "m1.y2": 0,
                 "m2.y1": 0, "m2.y2": 1}
    body = probe.formula
    while isinstance(body, F.Forall):
        body = body.body
    assert not eval_formula(body, names_env, quantifier_bound=QB)
    # With the sequence already in the certificate there is no escape via t.
    tau_full = CertificateTauStar(enc.n1, (("t",),))
    probe2 = enlargement_probe(enc, 1, tau_full, ("t",))
    body2 = probe2.formula
    while isinstance(body2, F.Forall):
        body2 = body2.body
    for vals in product(range(3), repeat=6):
        env = dict(zip(("m0.y1", "m0.y2", "m1.y1", "m1.y2", "m2.y1",
                        "m2.y2"), vals))
        assert eval_formula(body2, env, quantifier_bound=QB)
