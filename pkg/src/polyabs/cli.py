"""Command line front end.

    polyabs check <ruledir> [options]

Exit codes: 0 the rule is proven sound, 1 it is refuted, 2 the check is
inconclusive, 3 usage or parse error, 4 the bounded oracle disagrees with
the solver verdicts (a bug signal).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import oracle, pipeline
from .accel import AccelParams, CertificateTauStar
from .encode import CORE0, CORE1, CORE2, CORE3
from .loader import ReductionRule, RuleLoadError, load_rule
from .pipeline import CheckOptions, Verdict, check_rule, report
from .solver import SolverConfig, SolverUnavailable

EXIT_USAGE = 3
EXIT_DISAGREEMENT = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 3, not argparse's 2
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polyabs",
                     description="prove or refute net-equivalence rules")
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="check one rule directory")
    check.add_argument("ruledir", help="directory with initial.net, "
                                       "reduced.net and equiv.spec")
    check.add_argument("--solver-cmd", default=None,
                       help="solver command reading SMT-LIB on stdin")
    check.add_argument("--timeout-ms", type=int, default=60000,
                       help="per-query solver timeout")
    check.add_argument("--cert1", default=None,
                       help="certificate file for the initial net")
    check.add_argument("--cert2", default=None,
                       help="certificate file for the reduced net")
    check.add_argument("--accel-max-seq-len", type=int, default=4)
    check.add_argument("--accel-max-iters", type=int, default=16)
    check.add_argument("--oracle", type=int, default=None, metavar="TOKENS",
                       help="run the bounded oracle afterwards and fail "
                            "hard on disagreement")
    check.add_argument("--emit-smt", default=None, metavar="DIR",
                       help="dump every emitted solver script")
    check.add_argument("--json", action="store_true",
                       help="machine-readable verdict")
    return parser


def run_check(args: argparse.Namespace) -> int:
    try:
        rule = load_rule(args.ruledir, cert1=args.cert1, cert2=args.cert2)
    except (RuleLoadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.solver_cmd:
            config = SolverConfig.from_command(args.solver_cmd,
                                               args.timeout_ms)
        else:
            config = SolverConfig.default(args.timeout_ms)
    except SolverUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        accel_params = AccelParams(max_seq_len=args.accel_max_seq_len,
                                   max_iters=args.accel_max_iters,
                                   probe_timeout_ms=args.timeout_ms)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    options = CheckOptions(
        solver=config, accel=accel_params,
        emit_dir=Path(args.emit_smt) if args.emit_smt else None)
    verdict = check_rule(rule, options)
    print(report(verdict, "json" if args.json else "human"))

    code = pipeline.exit_code(verdict)
    if args.oracle is not None:
        lines, disagreements = oracle_audit(rule, verdict, args.oracle)
        for line in lines:
            print(line, file=sys.stderr)
        if disagreements:
            print("error: bounded oracle disagrees with solver verdicts:",
                  file=sys.stderr)
            for item in disagreements:
                print(f"  {item}", file=sys.stderr)
            return EXIT_DISAGREEMENT
    return code


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "check":
        return run_check(args)
    return EXIT_USAGE


# ---------------------------------------------------------------------------
# Oracle cross-check
# ---------------------------------------------------------------------------

_ENUM_LIMIT = 200_000


def final_core_results(verdict: Verdict) -> dict[tuple[str, str], str]:
    """Last core-phase status per (kind, subject); retries win."""
    out: dict[tuple[str, str], tuple[str, Optional[dict]]] = {}
    for run in verdict.queries:
        if run.phase == pipeline.PHASE_CORE:
            out[(run.kind, run.subject)] = (run.status, run.countermodel)
    return out


def _model_within(countermodel: Optional[dict[str, int]], cap: int) -> bool:
    if not countermodel:
        return True
    return all(v <= cap for k, v in countermodel.items() if "." in k)


def oracle_audit(rule: ReductionRule, verdict: Verdict,
                 max_tokens: int) -> tuple[list[str], list[str]]:
    """Re-derive each decided core verdict explicitly, within bounds.

    Returns human-readable outcome lines plus a list of disagreements: a
    solver "valid" with an explicit counterexample, or a solver "invalid"
    whose countermodel lies inside the bounds while the enumeration finds
    nothing.
    """
    bound = oracle.Bound(max_tokens=max_tokens)
    facts = rule.facts()
    results = final_core_results(verdict)
    lines: list[str] = []
    disagreements: list[str] = []

    def compare(kind: str, subject: str, outcome: oracle.CheckOutcome) -> None:
        solver_status, countermodel = results.get((kind, subject),
                                                  ("unknown", None))
        suffix = " (truncated)" if outcome.truncated else ""
        lines.append(f"oracle {kind} {subject}: "
                     f"{'ok' if outcome.ok else 'counterexample'}{suffix}"
                     f" | solver: {solver_status}")
        if solver_status == "valid" and not outcome.ok:
            disagreements.append(
                f"{kind} {subject}: solver valid but oracle found "
                f"{outcome.counterexample}")
        if solver_status == "invalid" and outcome.ok \
                and _model_within(countermodel, max_tokens):
            disagreements.append(
                f"{kind} {subject}: solver countermodel within bounds but "
                f"oracle found no counterexample")

    def guard(size: int, kind: str, subject: str) -> bool:
        if size > _ENUM_LIMIT:
            lines.append(f"oracle {kind} {subject}: skipped "
                         f"(enumeration ~{size} exceeds limit)")
            return False
        return True

    box = (max_tokens + 1)
    for which, net, c in ((1, rule.n1, rule.c1), (2, rule.n2, rule.c2)):
        size = oracle.enumeration_size(c, net.places, max_tokens)
        if guard(size, CORE0, f"net{which}"):
            compare(CORE0, f"net{which}",
                    oracle.check_coherency(net, c, bound))

    for src in (1, 2):
        subject = f"n{src}->n{3 - src}"
        net, c_src = facts.side(src)
        other, c_dst = facts.side(3 - src)
        wit = oracle.witness_bound(bound, net.places)
        s1_size = (oracle.enumeration_size(c_src, net.places, max_tokens)
                   * max(1, oracle.enumeration_size(c_dst, other.places, wit)))
        if guard(s1_size, CORE1, subject):
            compare(CORE1, subject,
                    oracle.check_solvability(facts, src, bound))
        s2_size = box ** len(net.places) * box ** len(other.places)
        if guard(s2_size, CORE2, subject):
            compare(CORE2, subject,
                    oracle.check_silent_stability(facts, src, bound))
        s3_size = (oracle.enumeration_size(c_src, net.places, max_tokens)
                   * (len(net.alphabet()) + 1)
                   * max(1, (wit + 1) ** len(other.places)))
        if guard(s3_size, CORE3, subject):
            compare(CORE3, subject,
                    oracle.check_simulation(facts, src, bound))

    # Certified silent predicates against explicit BFS.
    for which, net, c in ((1, rule.n1, rule.c1), (2, rule.n2, rule.c2)):
        cert = verdict.cert(which)
        if cert.status != "certified" or cert.sequences is None:
            continue
        n_seqs = len(cert.sequences)
        qbound = max_tokens * max(1, len(net.places)) + 2
        est = (oracle.enumeration_size(c, net.places, max_tokens)
               * box ** len(net.places) * (qbound + 1) ** n_seqs)
        if est > _ENUM_LIMIT * 10:
            lines.append(f"oracle tau-star net{which}: skipped "
                         f"(enumeration ~{est} exceeds limit)")
            continue
        tau = CertificateTauStar(net, cert.sequences)
        outcome = oracle.tau_star_matches_bfs(net, c, tau, bound)
        lines.append(f"oracle tau-star net{which}: "
                     f"{'ok' if outcome.ok else 'mismatch'}")
        if not outcome.ok:
            disagreements.append(
                f"tau-star net{which}: certified predicate disagrees with "
                f"explicit reachability: {outcome.counterexample}")

    # Empty reduced net: its linking constraint describes reachability.
    if not rule.n2.places and verdict.overall == pipeline.SOUND:
        outcome = oracle.reachability_matches_constraint(
            rule.n1, rule.c1, rule.e, bound)
        lines.append(f"oracle reach-vs-linking net1: "
                     f"{'ok' if outcome.ok else 'mismatch'}")
        if not outcome.ok:
            disagreements.append(
                f"reach-vs-linking: {outcome.note}: {outcome.counterexample}")

    return lines, disagreements


if __name__ == "__main__":
    sys.exit(main())
