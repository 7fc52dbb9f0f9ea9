"""Flat certificates for the silent sub-net: search, import, certification.

A certificate is an ordered list of silent firing sequences s1..sn whose
starred concatenation s1*...sn* is claimed to cover silent reachability
from the net's constraint markings.  The claim is never trusted: the
reflexivity and closure queries re-establish it through the solver, and
the agreement query additionally relates the certificate predicate to the
cheaper linking-derived form.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import encode
from .encode import (CertificateTauStar, CoreQuery, RuleEncoding,
                     closure_query, reflexivity_query, agreement_query,
                     enlargement_probe)
from .solver import SolverVerdict

# A runner discharges one query, possibly with a per-call timeout override.
QueryRunnerFn = Callable[[CoreQuery, Optional[int]], SolverVerdict]


@dataclass(frozen=True)
class FlatCertificate:
    sequences: tuple[tuple[str, ...], ...]
    source: str  # "searched" | "imported"

    def __str__(self) -> str:
        if not self.sequences:
            return "(empty)"
        return " ".join("(" + " ".join(seq) + ")*" for seq in self.sequences)


@dataclass(frozen=True)
class AccelParams:
    max_seq_len: int = 4
    max_iters: int = 16
    probe_timeout_ms: int = 5000

    def __post_init__(self) -> None:
        if self.max_seq_len < 1 or self.max_iters < 1 or self.probe_timeout_ms < 1:
            raise ValueError("acceleration parameters must be >= 1")


class CertificateFormatError(Exception):
    pass


def parse_certificate(text: str) -> FlatCertificate:
    """One sequence per line (or semicolon-separated); '#' comments."""
    sequences = []
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0]
        for chunk in line.split(";"):
            names = chunk.split()
            if names:
                sequences.append(tuple(names))
    return FlatCertificate(tuple(sequences), "imported")


def import_certificate(path: str | Path) -> FlatCertificate:
    return parse_certificate(Path(path).read_text())


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchResult:
    certificate: Optional[FlatCertificate]
    closed: bool
    iterations: int
    note: str = ""


def _candidates(ids: Sequence[str], max_len: int):
    """Shortlex enumeration over the sorted silent transition ids."""
    ordered = sorted(ids)
    for length in range(1, max_len + 1):
        yield from product(ordered, repeat=length)


def _escaping_transition(enc: RuleEncoding, which: int,
                         model: dict[str, int]) -> Optional[str]:
    """Silent transition matching the closure countermodel's escape step."""
    net = enc.net(which)
    before = {p: model.get(f"m1.{p}", 0) for p in net.places}
    after = {p: model.get(f"m2.{p}", 0) for p in net.places}
    for t in sorted(net.silent_transitions()):
        if net.fire(before, t) == after:
            return t
    return None


def search_certificate(enc: RuleEncoding, which: int, params: AccelParams,
                       run_query: QueryRunnerFn) -> SearchResult:
    """Grow a certificate until its closure query is valid.

    Each round asks the solver whether one extra silent step can escape the
    current coverage; the countermodel names the escaping transition, which
    is appended as a new starred sequence.  When the countermodel cannot be
    matched to a single transition, candidate sequences are probed in
    shortlex order instead and the first one that strictly enlarges
    coverage wins.  Gives up after max_iters rounds.
    """
    net = enc.net(which)
    sequences: list[tuple[str, ...]] = []
    if not net.silent_transitions():
        return SearchResult(FlatCertificate((), "searched"), True, 0)

    for iteration in range(1, params.max_iters + 1):
        tau = CertificateTauStar(net, sequences)
        verdict = run_query(closure_query(enc, which, tau),
                            params.probe_timeout_ms)
        if verdict.is_valid:
            return SearchResult(FlatCertificate(tuple(sequences), "searched"),
                                True, iteration)
        if not verdict.is_invalid:
            return SearchResult(None, False, iteration,
                                f"closure probe {verdict.status}"
                                f" ({verdict.reason})")
        escape = _escaping_transition(enc, which, verdict.countermodel or {})
        if escape is not None:
            sequences.append((escape,))
            continue
        for cand in _candidates(net.silent_transitions(), params.max_seq_len):
            probe = run_query(enlargement_probe(enc, which, tau, cand),
                              params.probe_timeout_ms)
            if probe.is_invalid:
                sequences.append(tuple(cand))
                break
        else:
            return SearchResult(None, False, iteration,
                                "closure fails but no candidate enlarges "
                                "coverage")
    return SearchResult(None, False, params.max_iters,
                        "iteration budget exhausted before closure")


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------

CERTIFIED = "certified"
REFUTED = "refuted"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class CertificationResult:
    certificate: FlatCertificate
    status: str  # "certified" | "refuted" | "unknown"
    failed_kind: Optional[str] = None
    failed_model: Optional[dict[str, int]] = None
    agreement: Optional[SolverVerdict] = None

    @property
    def agreement_valid(self) -> bool:
        return self.agreement is not None and self.agreement.is_valid


def certify(enc: RuleEncoding, which: int, cert: FlatCertificate,
            run_query: QueryRunnerFn,
            timeout_ms: Optional[int] = None) -> CertificationResult:
    """Check reflexivity and closure (mandatory) plus agreement (advisory).

    Certified means the predicate is exact: models never exceed real silent
    firings by construction (each one replays as concrete repetitions), and
    closure plus reflexivity force it to cover all of them.
    """
    tau = CertificateTauStar(enc.net(which), cert.sequences)
    for mandatory in (reflexivity_query, closure_query):
        query = mandatory(enc, which, tau)
        verdict = run_query(query, timeout_ms)
        if verdict.is_invalid:
            return CertificationResult(cert, REFUTED, query.kind,
                                       verdict.countermodel)
        if not verdict.is_valid:
            return CertificationResult(cert, UNKNOWN, query.kind)
    agreement = run_query(agreement_query(enc, which, tau), timeout_ms)
    return CertificationResult(cert, CERTIFIED, agreement=agreement)
