"""Acceptance suite: one test per shipping criterion, each printing a
pass/fail line.  Run with `pytest tests/test_acceptance.py -v -s`."""

import json
import os
import random
from dataclasses import replace
from itertools import product

import pytest

from polyabs.accel import AccelParams
from polyabs.cli import final_core_results, main, oracle_audit
from polyabs.encode import CertificateTauStar
from polyabs.formula import eval_formula
from polyabs.loader import load_rule
from polyabs.net import PetriNet, hurdle_delta, power_hurdle_delta
from polyabs.oracle import (Bound, check_coherency,
                            reachability_matches_constraint,
                            tau_star_matches_bfs)
from polyabs.solver import outer_universals

from netgen import random_marking, random_net, random_sequence

POOL_ACCEL = AccelParams(max_seq_len=4, max_iters=60, probe_timeout_ms=20000)


def _announce(number: int, ok: bool, text: str) -> None:
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {text}")
    assert ok, text


def _core_statuses(verdict):
    return final_core_results(verdict)


def test_criterion_1_concat_sound(checked):
    rule, verdict, wall = checked("concat")
    cores = _core_statuses(verdict)
    ok = (verdict.overall == "SOUND"
          and len(cores) == 8
          and all(status == "valid" for status, _ in cores.values())
          and verdict.cert(1).status == "certified"
          and verdict.cert(1).sequences == (("t",),)
          and verdict.cert(2).status == "certified"
          and wall <= 30.0)
    _announce(1, ok, f"concat SOUND, 8/8 core queries valid, certificate "
                     f"(t)* certified, wall {wall:.1f}s <= 30s")


def test_criterion_2_fake_concat_unsound(checked):
    rule, verdict, wall = checked("fake_concat")
    cores = _core_statuses(verdict)
    status, countermodel = cores[("core0", "net1")]
    # the narrative names the first failing requirement in fixed order
    ok = (verdict.overall == "UNSOUND"
          and status == "invalid"
          and verdict.narrative.startswith("requirement core0 on net1")
          and countermodel is not None
          and countermodel.get("m1.y2", 0) >= 1)
    # independent explicit-state confirmation, with the offending label
    oracle_out = check_coherency(rule.n1, rule.c1, Bound(6, 12))
    ok = ok and not oracle_out.ok and oracle_out.counterexample[1] == "d"
    _announce(2, ok, "fake_concat UNSOUND at core0(net1), countermodel has "
                     "y2 >= 1, oracle coherency counterexample uses label d")


def test_criterion_3_hurdle_displacement_exactness():
    rng = random.Random(20240517)
    checked_cases = 0
    for _ in range(1000):
        net = random_net(rng, max_places=5, max_transitions=5)
        seq = random_sequence(rng, net, max_len=6)
        m = random_marking(rng, net, max_tokens=5)
        h, d = hurdle_delta(net, seq)
        outcome = net.fire_sequence(m, seq)
        fires = all(m[p] >= h[p] for p in net.places)
        assert (outcome is not None) == fires
        if outcome is not None:
            assert outcome == {p: m[p] + d[p] for p in net.places}
        checked_cases += 1

    # Exhaustive sweep: every 2-place net with two 0/1-weight transitions,
    # all sequences up to length 3, all markings with components <= 3.
    exhaustive = 0
    rows = list(product((0, 1), repeat=2))
    arcs = [(pre, post) for pre in rows for post in rows]
    for t0, t1 in product(arcs, repeat=2):
        net = PetriNet(("p0", "p1"), ("t0", "t1"),
                       {"t0": dict(zip(("p0", "p1"), t0[0])),
                        "t1": dict(zip(("p0", "p1"), t1[0]))},
                       {"t0": dict(zip(("p0", "p1"), t0[1])),
                        "t1": dict(zip(("p0", "p1"), t1[1]))},
                       {"t0": None, "t1": None})
        seqs = [()] + [s for n in (1, 2, 3)
                       for s in product(("t0", "t1"), repeat=n)]
        for seq in seqs:
            h, d = hurdle_delta(net, seq)
            for vals in product(range(4), repeat=2):
                m = dict(zip(("p0", "p1"), vals))
                outcome = net.fire_sequence(m, seq)
                fires = all(m[p] >= h[p] for p in net.places)
                assert (outcome is not None) == fires
                if outcome is not None:
                    assert outcome == {p: m[p] + d[p] for p in net.places}
                exhaustive += 1
    assert exhaustive == 256 * 15 * 16
    _announce(3, checked_cases >= 1000,
              f"hurdle/displacement exact on {checked_cases} random and "
              f"{exhaustive} exhaustive cases")


def test_criterion_4_acceleration_closed_forms(rules_dir):
    sequences = []
    for name in ("concat", "fake_concat", "pool_small"):
        rule = load_rule(rules_dir / name)
        net = rule.n1
        for t in net.silent_transitions():
            sequences.append((net, (t,)))
    concat_net = load_rule(rules_dir / "concat").n1
    pool_net = load_rule(rules_dir / "pool_small").n1
    sequences.append((concat_net, ("t", "t")))
    sequences.append((pool_net, ("enter", "getcabin")))
    sequences.append((pool_net, ("enter", "getcabin", "getbag", "bathe",
                                 "regain", "dress", "leave")))
    total = 0
    for net, seq in sequences:
        for k in range(9):
            closed = power_hurdle_delta(net, seq, k)
            inductive = hurdle_delta(net, seq * k)
            assert closed == inductive, (seq, k)
            total += 1
    _announce(4, total == len(sequences) * 9,
              f"closed-form repetition hurdle/displacement exact for "
              f"{len(sequences)} sequences, k = 0..8")


def test_criterion_5_tau_star_certification(checked):
    rule, verdict, _ = checked("concat")
    cert_runs = [r for r in verdict.queries
                 if r.phase == "certify" and r.subject == "net1"]
    kinds = {r.kind: r.status for r in cert_runs}
    ok = (kinds.get("tau-reflexive") == "valid"
          and kinds.get("tau-closure") == "valid"
          and kinds.get("tau-equiv") == "valid")
    tau = CertificateTauStar(rule.n1, verdict.cert(1).sequences)
    agreement = tau_star_matches_bfs(rule.n1, rule.c1, tau, Bound(6, 12))
    ok = ok and agreement.ok
    _announce(5, ok, "concat certificate: reflexivity, closure and linking "
                     "agreement valid; bounded models equal BFS reachability")


CORPUS = ("concat", "fake_concat", "redundant_place", "wrong_e_concat",
          "identity", "relabeled_concat")


def test_criterion_6_solver_oracle_agreement(checked):
    expected = {
        "concat": "SOUND",
        "fake_concat": "UNSOUND",
        "redundant_place": "SOUND",
        "wrong_e_concat": "UNSOUND",
        "identity": "SOUND",
        "relabeled_concat": "SOUND",
    }
    all_disagreements = []
    for name in CORPUS:
        rule, verdict, _ = checked(name)
        assert verdict.overall == expected[name], name
        _, disagreements = oracle_audit(rule, verdict, 6)
        all_disagreements.extend(f"{name}: {d}" for d in disagreements)

    # wrong-E variant: first failure is the silent-stability query, and the
    # analytic countermodel (y1=1, y2=0, x=1) falsifies its body.
    rule, verdict, _ = checked("wrong_e_concat")
    status, countermodel = _core_statuses(verdict)[("core2", "n1->n2")]
    assert status == "invalid"
    assert verdict.narrative.startswith("requirement core2 on n1->n2")
    from polyabs.encode import stability_query
    body = outer_universals(
        stability_query(rule.encoding(), 1).formula)[1]
    analytic = {"m0.y1": 1, "m0.y2": 0, "m1.x": 1, "m2.y1": 0, "m2.y2": 1}
    assert not eval_formula(body, analytic)
    assert not eval_formula(body, countermodel)

    _announce(6, not all_disagreements,
              f"bounded oracle agrees with solver verdicts on "
              f"{len(CORPUS)} rules; wrong-E fails silent stability with "
              f"the analytic countermodel")


def test_criterion_7_swimming_pool_scaled(checked):
    rule, verdict, wall = checked("pool_small", timeout_ms=20000,
                                  accel=POOL_ACCEL)
    ok = verdict.overall == "SOUND" and wall <= 120.0
    reach = reachability_matches_constraint(rule.n1, rule.c1, rule.e,
                                            Bound(6, 12))
    ok = ok and reach.ok and not reach.truncated
    _announce(7, ok, f"swimming pool (2 cabins/3 users/2 bags) vs empty net "
                     f"SOUND in {wall:.1f}s <= 120s; bounded reachability "
                     f"equals the solution set of the linking constraint")


@pytest.mark.skipif(not os.environ.get("POLYABS_POOL_FULL"),
                    reason="full-scale pool run is a soft check; set "
                           "POLYABS_POOL_FULL=1 to attempt it")
@pytest.mark.xfail(strict=False, reason="soft, non-blocking check")
def test_criterion_7_swimming_pool_full_scale_soft(checked):
    rule, verdict, wall = checked(
        "pool_full", timeout_ms=60000,
        accel=AccelParams(max_seq_len=4, max_iters=120,
                          probe_timeout_ms=60000))
    _announce(7, verdict.overall == "SOUND",
              f"full-scale pool (10/20/15) SOUND in {wall:.1f}s")


def test_criterion_8_preservation_by_transition_operations(checked):
    base_rule, base_verdict, _ = checked("concat")
    assert base_verdict.overall == "SOUND"

    duplicated = replace(
        base_rule, name="concat+dup_b",
        n1=base_rule.n1.duplicate_labeled("b", "bp"),
        n2=base_rule.n2.duplicate_labeled("b", "bp"))
    _, verdict_dup, _ = checked("concat+dup_b", rule=duplicated)

    removed = replace(
        base_rule, name="concat-del_b",
        n1=base_rule.n1.remove_labeled("b"),
        n2=base_rule.n2.remove_labeled("b"))
    _, verdict_del, _ = checked("concat-del_b", rule=removed)

    ok = (verdict_dup.overall == "SOUND" and verdict_del.overall == "SOUND")
    _announce(8, ok, "duplicating b on both nets and removing b on both "
                     "nets both preserve SOUND")


def test_criterion_9_determinism(rules_dir, tmp_path, capsys):
    def one_run(tag):
        out_dir = tmp_path / tag
        code = main(["check", str(rules_dir / "concat"),
                     "--emit-smt", str(out_dir), "--json"])
        captured = capsys.readouterr().out
        data = json.loads(captured)
        scripts = {p.name: p.read_bytes() for p in out_dir.iterdir()}
        return code, data, scripts

    code1, data1, scripts1 = one_run("first")
    code2, data2, scripts2 = one_run("second")

    def strip_wall(data):
        for q in data["queries"]:
            q.pop("wall_ms", None)
        return data

    ok = (code1 == code2 == 0
          and scripts1 == scripts2
          and strip_wall(data1) == strip_wall(data2))
    _announce(9, ok, f"two runs: {len(scripts1)} byte-identical scripts and "
                     f"identical JSON verdicts (wall time aside)")
