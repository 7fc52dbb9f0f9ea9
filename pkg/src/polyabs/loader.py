"""Rule directories: net files, the equivalence spec and certificates.

Net files use a small place/transition syntax:

    net <name>                      # optional
    pl <place> (<tokens>)           # initial tokens are informative only
    tr <name> [: <label>] <in>... -> <out>...

where each arc is ``place`` or ``place*weight``; the reserved label
``tau`` marks a silent transition and a transition without an explicit
label is observable under its own name.  ``#`` starts a comment.

The equivalence spec file holds three labeled entries ``C1:``, ``C2:`` and
``E:``, each followed by a constraint in the textual grammar; an entry may
span several lines, which are joined with ``and``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .accel import FlatCertificate, import_certificate
from .encode import LabelCoding, RuleEncoding
from .formula import Formula, build_linking_formula, free_vars, rename_bound
from .net import Marking, PetriNet
from .oracle import RuleFacts
from .parser import ParseError, parse_formula

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")

SILENT_WORD = "tau"


class RuleLoadError(Exception):
    pass


def _ident(token: str, what: str, lineno: int) -> str:
    if not _IDENT.match(token):
        raise RuleLoadError(f"line {lineno}: invalid {what} name {token!r}")
    return token


def _parse_arc(token: str, lineno: int) -> tuple[str, int]:
    if "*" in token:
        name, _, raw = token.partition("*")
        if not raw.isdigit():
            raise RuleLoadError(f"line {lineno}: bad arc weight in {token!r}")
        weight = int(raw)
        if weight < 1:
            raise RuleLoadError(f"line {lineno}: arc weight must be >= 1")
        return _ident(name, "place", lineno), weight
    return _ident(token, "place", lineno), 1


def parse_net(text: str, name: str = "") -> tuple[PetriNet, Marking]:
    """Parse a net file; returns the net and its (informative) marking."""
    places: list[str] = []
    tokens: dict[str, int] = {}
    transitions: list[str] = []
    pre: dict[str, dict[str, int]] = {}
    post: dict[str, dict[str, int]] = {}
    label: dict[str, Optional[str]] = {}

    def declare_place(p: str) -> None:
        if p not in tokens:
            places.append(p)
            tokens[p] = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "net":
            if len(parts) != 2:
                raise RuleLoadError(f"line {lineno}: expected 'net <name>'")
            name = parts[1]
        elif head == "pl":
            if len(parts) == 2:
                p, count = parts[1], 0
            elif len(parts) == 3 and parts[2].startswith("(") \
                    and parts[2].endswith(")"):
                inner = parts[2][1:-1]
                if not inner.isdigit():
                    raise RuleLoadError(
                        f"line {lineno}: bad token count {parts[2]!r}")
                p, count = parts[1], int(inner)
            else:
                raise RuleLoadError(
                    f"line {lineno}: expected 'pl <name> (<tokens>)'")
            p = _ident(p, "place", lineno)
            declare_place(p)
            tokens[p] = count
        elif head == "tr":
            if len(parts) < 2:
                raise RuleLoadError(f"line {lineno}: transition needs a name")
            t = _ident(parts[1], "transition", lineno)
            if t in pre:
                raise RuleLoadError(f"line {lineno}: duplicate transition {t!r}")
            rest = parts[2:]
            lab: Optional[str]
            if rest and rest[0] == ":":
                if len(rest) < 2:
                    raise RuleLoadError(f"line {lineno}: missing label after ':'")
                word = rest[1]
                lab = None if word == SILENT_WORD else _ident(word, "label",
                                                              lineno)
                rest = rest[2:]
            else:
                if t == SILENT_WORD:
                    raise RuleLoadError(
                        f"line {lineno}: 'tau' is reserved; label the "
                        f"transition explicitly")
                lab = t
            if "->" not in rest:
                raise RuleLoadError(f"line {lineno}: transition needs '->'")
            arrow = rest.index("->")
            pre_row: dict[str, int] = {}
            post_row: dict[str, int] = {}
            for tok in rest[:arrow]:
                p, w = _parse_arc(tok, lineno)
                declare_place(p)
                pre_row[p] = pre_row.get(p, 0) + w
            for tok in rest[arrow + 1:]:
                p, w = _parse_arc(tok, lineno)
                declare_place(p)
                post_row[p] = post_row.get(p, 0) + w
            transitions.append(t)
            pre[t] = pre_row
            post[t] = post_row
            label[t] = lab
        else:
            raise RuleLoadError(f"line {lineno}: unknown directive {head!r}")

    try:
        net = PetriNet(tuple(places), tuple(transitions), pre, post, label,
                       name)
    except ValueError as exc:
        raise RuleLoadError(str(exc)) from exc
    return net, {p: tokens[p] for p in places}


def load_net(path: str | Path) -> tuple[PetriNet, Marking]:
    path = Path(path)
    return parse_net(path.read_text(), name=path.stem)


# ---------------------------------------------------------------------------
# Equivalence spec files
# ---------------------------------------------------------------------------

_SECTIONS = ("C1", "C2", "E")


def parse_equiv_spec(text: str) -> dict[str, Formula]:
    chunks: dict[str, list[str]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        head = line.strip()
        matched = None
        for section in _SECTIONS:
            if head.startswith(section + ":"):
                matched = section
                head = head[len(section) + 1:].strip()
                break
        if matched:
            if matched in chunks:
                raise RuleLoadError(f"line {lineno}: duplicate section "
                                    f"{matched}:")
            current = matched
            chunks[current] = [head] if head else []
        elif current is None:
            raise RuleLoadError(f"line {lineno}: content before any of "
                                f"C1:/C2:/E:")
        else:
            chunks[current].append(head)
    missing = [s for s in _SECTIONS if s not in chunks]
    if missing:
        raise RuleLoadError(f"missing sections: {', '.join(missing)}")
    out: dict[str, Formula] = {}
    for section, lines in chunks.items():
        joined = " and ".join(x for x in lines if x)
        if not joined:
            raise RuleLoadError(f"section {section}: is empty")
        try:
            out[section] = parse_formula(joined)
        except ParseError as exc:
            raise RuleLoadError(f"section {section}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Rule directories
# ---------------------------------------------------------------------------

INITIAL_NET = "initial.net"
REDUCED_NET = "reduced.net"
EQUIV_SPEC = "equiv.spec"
INITIAL_CERT = "initial.cert"
REDUCED_CERT = "reduced.cert"


@dataclass(frozen=True)
class ReductionRule:
    name: str
    n1: PetriNet
    n2: PetriNet
    m01: Marking
    m02: Marking
    c1: Formula
    c2: Formula
    e: Formula
    cert1: Optional[FlatCertificate]
    cert2: Optional[FlatCertificate]

    @property
    def shared_places(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.n1.places) & set(self.n2.places)))

    def encoding(self) -> RuleEncoding:
        e_tilde = build_linking_formula(self.e, self.n1.places, self.n2.places)
        return RuleEncoding(self.n1, self.n2, self.c1, self.c2, e_tilde,
                            LabelCoding.over(self.n1, self.n2))

    def facts(self) -> RuleFacts:
        return RuleFacts(self.n1, self.n2, self.c1, self.c2, self.e)


def _check_vars(f: Formula, allowed: set[str], what: str) -> None:
    stray = free_vars(f) - allowed
    if stray:
        raise RuleLoadError(f"{what} mentions undeclared places: "
                            f"{', '.join(sorted(stray))}")


def load_rule(directory: str | Path, cert1: Optional[str | Path] = None,
              cert2: Optional[str | Path] = None) -> ReductionRule:
    directory = Path(directory)
    if not directory.is_dir():
        raise RuleLoadError(f"{directory} is not a directory")
    for required in (INITIAL_NET, REDUCED_NET, EQUIV_SPEC):
        if not (directory / required).is_file():
            raise RuleLoadError(f"{directory} lacks {required}")
    n1, m01 = load_net(directory / INITIAL_NET)
    n2, m02 = load_net(directory / REDUCED_NET)
    spec = parse_equiv_spec((directory / EQUIV_SPEC).read_text())

    p1, p2 = set(n1.places), set(n2.places)
    _check_vars(spec["C1"], p1, "C1")
    _check_vars(spec["C2"], p2, "C2")
    _check_vars(spec["E"], p1 | p2, "E")

    def cert_path(given: Optional[str | Path],
                  default: str) -> Optional[Path]:
        if given is not None:
            return Path(given)
        candidate = directory / default
        return candidate if candidate.is_file() else None

    path1 = cert_path(cert1, INITIAL_CERT)
    path2 = cert_path(cert2, REDUCED_CERT)
    return ReductionRule(
        name=directory.name,
        n1=n1, n2=n2, m01=m01, m02=m02,
        c1=rename_bound(spec["C1"], stem="_c"),
        c2=rename_bound(spec["C2"], stem="_d"),
        e=spec["E"],
        cert1=import_certificate(path1) if path1 else None,
        cert2=import_certificate(path2) if path2 else None)
