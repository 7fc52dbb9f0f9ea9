"""End-to-end check of a candidate rule.

Order of business: obtain a flat certificate per net (imported or
searched), certify it (reflexivity and closure are mandatory, agreement
with the linking form is advisory), then discharge the eight core queries.
Queries that stay undecided are retried with the cheaper linking-derived
silent-reachability form once agreement has been validated for the nets
involved.  Extra solver time can only turn INCONCLUSIVE into a decided
verdict, never flip SOUND and UNSOUND.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import accel, encode, solver
from .accel import AccelParams, FlatCertificate
from .encode import (CORE0, CORE1, CORE2, CORE3, CertificateTauStar,
                     CoreQuery, RuleEncoding, TauStar)
from .loader import ReductionRule
from .solver import SolverConfig, SolverVerdict

SOUND = "SOUND"
UNSOUND = "UNSOUND"
INCONCLUSIVE = "INCONCLUSIVE"

PHASE_SEARCH = "search"
PHASE_CERTIFY = "certify"
PHASE_CORE = "core"


@dataclass(frozen=True)
class QueryRun:
    phase: str
    kind: str
    subject: str
    tau_form: str
    status: str
    reason: Optional[str]
    countermodel: Optional[dict[str, int]]
    wall_ms: float
    cached: bool
    script_name: Optional[str]


class QueryRunner:
    """Runs queries through one solver config, recording every attempt.

    Identical scripts are answered from an in-run cache (the search's last
    closure query is also the certification's closure query).  When an
    emission directory is set, every attempt's script is written there
    under a deterministic, counter-prefixed name.
    """

    def __init__(self, config: SolverConfig,
                 emit_dir: Optional[Path] = None) -> None:
        self.config = config
        self.emit_dir = emit_dir
        self.cache: dict[str, SolverVerdict] = {}
        self.runs: list[QueryRun] = []
        self.counter = 0

    def _emit(self, query: CoreQuery, script: str) -> Optional[str]:
        if self.emit_dir is None:
            return None
        name = (f"{self.counter:03d}-{query.kind}-"
                f"{query.subject.replace('->', '-to-')}-{query.tau_form}.smt2")
        self.emit_dir.mkdir(parents=True, exist_ok=True)
        (self.emit_dir / name).write_text(script)
        return name

    def run(self, query: CoreQuery, phase: str,
            timeout_ms: Optional[int] = None) -> SolverVerdict:
        script = solver.emit_validity_script(query)
        self.counter += 1
        script_name = self._emit(query, script)
        cached = script in self.cache
        if cached:
            verdict = self.cache[script]
            wall_ms = 0.0
        else:
            config = self.config
            if timeout_ms is not None:
                config = SolverConfig(config.command, timeout_ms, config.env)
            start = time.perf_counter()
            verdict = solver.run(script, config)
            wall_ms = (time.perf_counter() - start) * 1000.0
            if verdict.is_invalid:
                names, _ = solver.outer_universals(query.formula)
                verdict = SolverVerdict(
                    solver.INVALID,
                    countermodel={n: (verdict.countermodel or {}).get(n, 0)
                                  for n in names},
                    output=verdict.output)
            self.cache[script] = verdict
        self.runs.append(QueryRun(
            phase=phase, kind=query.kind, subject=query.subject,
            tau_form=query.tau_form, status=verdict.status,
            reason=verdict.reason, countermodel=verdict.countermodel,
            wall_ms=round(wall_ms, 3), cached=cached,
            script_name=script_name))
        return verdict

    def record_skipped(self, kind: str, subject: str, reason: str) -> None:
        self.runs.append(QueryRun(
            phase=PHASE_CORE, kind=kind, subject=subject, tau_form="none",
            status=solver.UNKNOWN, reason=reason, countermodel=None,
            wall_ms=0.0, cached=False, script_name=None))


@dataclass(frozen=True)
class CheckOptions:
    solver: SolverConfig
    accel: AccelParams = AccelParams()
    emit_dir: Optional[Path] = None


@dataclass(frozen=True)
class CertReport:
    source: Optional[str]        # "searched" | "imported" | None
    sequences: Optional[tuple[tuple[str, ...], ...]]
    status: str                  # "certified" | "refuted" | "unknown" | "missing"
    failed_kind: Optional[str] = None
    agreement_valid: bool = False
    note: str = ""


@dataclass(frozen=True)
class Verdict:
    overall: str
    rule_name: str
    alphabet: tuple[str, ...]
    certs: tuple[CertReport, CertReport]
    queries: tuple[QueryRun, ...]
    narrative: str

    def cert(self, which: int) -> CertReport:
        return self.certs[which - 1]


_CORE_ORDER = (
    (CORE0, "net1"), (CORE0, "net2"),
    (CORE1, "n1->n2"), (CORE1, "n2->n1"),
    (CORE2, "n1->n2"), (CORE2, "n2->n1"),
    (CORE3, "n1->n2"), (CORE3, "n2->n1"),
)


def _obtain_certificate(rule: ReductionRule, enc: RuleEncoding, which: int,
                        options: CheckOptions,
                        runner: QueryRunner) -> tuple[Optional[FlatCertificate], str]:
    given = rule.cert1 if which == 1 else rule.cert2
    if given is not None:
        return given, ""
    result = accel.search_certificate(
        enc, which, options.accel,
        lambda q, t: runner.run(q, PHASE_SEARCH, t))
    if result.closed and result.certificate is not None:
        return result.certificate, ""
    return None, result.note or "certificate search failed"


def check_rule(rule: ReductionRule, options: CheckOptions) -> Verdict:
    enc = rule.encoding()
    runner = QueryRunner(options.solver, options.emit_dir)

    certs: dict[int, Optional[FlatCertificate]] = {}
    reports: dict[int, CertReport] = {}
    certified: dict[int, bool] = {}
    agreement: dict[int, bool] = {}
    taus: dict[int, Optional[TauStar]] = {}

    for which in (1, 2):
        cert, note = _obtain_certificate(rule, enc, which, options, runner)
        certs[which] = cert
        if cert is None:
            reports[which] = CertReport(None, None, "missing", note=note)
            certified[which] = False
            agreement[which] = False
            taus[which] = None
            continue
        outcome = accel.certify(enc, which, cert,
                                lambda q, t: runner.run(q, PHASE_CERTIFY, t))
        certified[which] = outcome.status == accel.CERTIFIED
        agreement[which] = outcome.agreement_valid
        reports[which] = CertReport(
            cert.source, cert.sequences, outcome.status,
            failed_kind=outcome.failed_kind,
            agreement_valid=outcome.agreement_valid,
            note=note)
        taus[which] = CertificateTauStar(enc.net(which), cert.sequences)

    def build_query(kind: str, subject: str,
                    tau_of: dict[int, Optional[TauStar]]) -> Optional[CoreQuery]:
        if kind == CORE0:
            which = 1 if subject == "net1" else 2
            tau = tau_of[which]
            return None if tau is None else encode.coherence_query(enc, which,
                                                                   tau)
        src = 1 if subject.startswith("n1") else 2
        if kind == CORE1:
            return encode.solvability_query(enc, src)
        if kind == CORE2:
            return encode.stability_query(enc, src)
        tau_src, tau_dst = tau_of[src], tau_of[3 - src]
        if tau_src is None or tau_dst is None:
            return None
        return encode.simulation_query(enc, src, tau_src, tau_dst)

    results: dict[tuple[str, str], SolverVerdict] = {}
    for kind, subject in _CORE_ORDER:
        query = build_query(kind, subject, taus)
        if query is None:
            runner.record_skipped(kind, subject, "no certified predicate")
            results[(kind, subject)] = SolverVerdict(
                solver.UNKNOWN, reason="no certified predicate")
        else:
            results[(kind, subject)] = runner.run(query, PHASE_CORE)

    # Retry undecided queries with the linking-derived predicate wherever
    # its agreement with the certified one has been validated.
    linking: dict[int, Optional[TauStar]] = {
        which: (enc.linking_tau_star(which)
                if certified[which] and agreement[which] else taus[which])
        for which in (1, 2)}

    def involved(kind: str, subject: str) -> tuple[int, ...]:
        if kind == CORE0:
            return (1,) if subject == "net1" else (2,)
        if kind == CORE3:
            return (1, 2)
        return ()

    for kind, subject in _CORE_ORDER:
        if results[(kind, subject)].decided:
            continue
        nets = involved(kind, subject)
        if not nets or all(linking[w] is taus[w] for w in nets):
            continue
        query = build_query(kind, subject, linking)
        if query is not None:
            results[(kind, subject)] = runner.run(query, PHASE_CORE)

    # Aggregate.  An invalid core0/core3 is trusted only when the silent
    # predicates it mentions are certified; core1/core2 never mention one.
    def trusted(kind: str, subject: str) -> bool:
        if kind in (CORE1, CORE2):
            return True
        if kind == CORE0:
            return certified[1 if subject == "net1" else 2]
        return certified[1] and certified[2]

    first_failure: Optional[tuple[str, str, SolverVerdict]] = None
    all_valid = True
    for kind, subject in _CORE_ORDER:
        verdict = results[(kind, subject)]
        if not verdict.is_valid:
            all_valid = False
        if verdict.is_invalid and trusted(kind, subject) \
                and first_failure is None:
            first_failure = (kind, subject, verdict)

    if first_failure is not None:
        kind, subject, verdict = first_failure
        narrative = (f"requirement {kind} on {subject} fails; "
                     f"countermodel: "
                     f"{format_countermodel(verdict.countermodel, enc)}")
        overall = UNSOUND
    elif all_valid and certified[1] and certified[2]:
        overall = SOUND
        narrative = "all core requirements valid; certificates certified"
    else:
        overall = INCONCLUSIVE
        blockers = []
        for which in (1, 2):
            if not certified[which]:
                blockers.append(f"net{which} silent predicate "
                                f"{reports[which].status}")
        for kind, subject in _CORE_ORDER:
            if not results[(kind, subject)].decided:
                blockers.append(f"{kind} on {subject} undecided")
        narrative = "; ".join(blockers) if blockers else "undecided"

    return Verdict(
        overall=overall, rule_name=rule.name,
        alphabet=enc.coding.symbols,
        certs=(reports[1], reports[2]),
        queries=tuple(runner.runs),
        narrative=narrative)


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def format_countermodel(model: Optional[dict[str, int]],
                        enc: Optional[RuleEncoding] = None) -> str:
    if not model:
        return "(none)"
    groups: dict[str, list[str]] = {}
    scalars: list[str] = []
    for name in sorted(model):
        value = model[name]
        if "." in name:
            prefix, place = name.split(".", 1)
            groups.setdefault(prefix, []).append(f"{place}: {value}")
        else:
            text = f"{name} = {value}"
            if name == "a" and enc is not None:
                symbol = enc.coding.symbol(value) if value <= enc.coding.size \
                    else None
                text += f" (label {symbol})" if symbol else " (silent)"
            scalars.append(text)
    parts = [f"{prefix} = {{{', '.join(entries)}}}"
             for prefix, entries in sorted(groups.items())]
    return "; ".join(parts + scalars)


def _cert_json(report: CertReport) -> dict:
    return {
        "source": report.source,
        "sequences": ([list(seq) for seq in report.sequences]
                      if report.sequences is not None else None),
        "status": report.status,
        "failed_kind": report.failed_kind,
        "agreement_valid": report.agreement_valid,
        "note": report.note,
    }


def verdict_json(verdict: Verdict) -> dict:
    return {
        "rule": verdict.rule_name,
        "overall": verdict.overall,
        "alphabet": list(verdict.alphabet),
        "certificates": {
            "net1": _cert_json(verdict.cert(1)),
            "net2": _cert_json(verdict.cert(2)),
        },
        "queries": [
            {
                "phase": run.phase,
                "kind": run.kind,
                "subject": run.subject,
                "tau_form": run.tau_form,
                "status": run.status,
                "reason": run.reason,
                "countermodel": run.countermodel,
                "wall_ms": run.wall_ms,
                "cached": run.cached,
                "script": run.script_name,
            }
            for run in verdict.queries
        ],
        "narrative": verdict.narrative,
    }


def report(verdict: Verdict, fmt: str = "human") -> str:
    if fmt == "json":
        return json.dumps(verdict_json(verdict), indent=2, sort_keys=True)
    lines = [f"rule {verdict.rule_name}: {verdict.overall}"]
    for which in (1, 2):
        cert = verdict.cert(which)
        if cert.sequences is None:
            lines.append(f"  net{which} certificate: missing ({cert.note})")
        else:
            shown = " ".join("(" + " ".join(seq) + ")*"
                             for seq in cert.sequences) or "(empty)"
            agreed = ", agreement valid" if cert.agreement_valid else ""
            lines.append(f"  net{which} certificate [{cert.source}] "
                         f"{shown}: {cert.status}{agreed}")
    core_runs = [r for r in verdict.queries if r.phase == PHASE_CORE]
    for run in core_runs:
        mark = {"valid": "ok", "invalid": "FAIL",
                "unknown": "?"}[run.status]
        extra = f" ({run.reason})" if run.reason else ""
        lines.append(f"  {run.kind} {run.subject} [{run.tau_form}]: "
                     f"{mark}{extra}")
    lines.append(f"  {verdict.narrative}")
    return "\n".join(lines)


def exit_code(verdict: Verdict) -> int:
    return {SOUND: 0, UNSOUND: 1, INCONCLUSIVE: 2}[verdict.overall]
