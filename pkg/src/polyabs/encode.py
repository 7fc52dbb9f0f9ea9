"""Compilation of net semantics and equivalence requirements to formulas.

Every query built here is a closed formula over natural variables.  A
marking vector is a namespace of variables, one per place ("m0.y1" is
place y1 in vector m0).  Observable labels are coded as 1..|alphabet| in
alphabetical order; 0 is reserved for the silent action.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from . import formula as F
from .formula import Formula, LinTerm
from .net import PetriNet, hurdle_delta, positive_part

# Query kinds.  The eight core checks decide the equivalence; the three
# certificate checks establish that a silent-reachability predicate can be
# trusted.
CORE0 = "core0"          # coherence of one net with its constraint
CORE1 = "core1"          # solvability of the linking constraint
CORE2 = "core2"          # silent steps preserve the linking constraint
CORE3 = "core3"          # observable steps are simulated by the other net
TAU_REFLEXIVE = "tau-reflexive"
TAU_CLOSURE = "tau-closure"
TAU_EQUIV = "tau-equiv"  # certificate predicate matches the linking form
PROBE = "probe"          # internal: coverage probes of the certificate search

NS1 = "n1."
NS2 = "n2."


class EncodingError(Exception):
    pass


@dataclass(frozen=True)
class LabelCoding:
    """Bijection observable symbol <-> numeric code 1..n (0 is silent)."""

    symbols: tuple[str, ...]

    @staticmethod
    def over(*nets: PetriNet) -> "LabelCoding":
        symbols: set[str] = set()
        for net in nets:
            symbols.update(net.alphabet())
        return LabelCoding(tuple(sorted(symbols)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def code(self, symbol: Optional[str]) -> int:
        if symbol is None:
            return 0
        try:
            return self.symbols.index(symbol) + 1
        except ValueError:
            raise EncodingError(f"symbol {symbol!r} is not in the alphabet")

    def symbol(self, code: int) -> Optional[str]:
        if code == 0:
            return None
        return self.symbols[code - 1]


@dataclass(frozen=True)
class VarVec:
    """One marking vector: the namespace ``prefix`` over ``places``."""

    prefix: str
    places: tuple[str, ...]

    def name(self, p: str) -> str:
        return self.prefix + p

    def names(self) -> tuple[str, ...]:
        return tuple(self.prefix + p for p in self.places)

    def term(self, p: str) -> LinTerm:
        return F.var(self.name(p))

    def subst_from(self, places: Iterable[str],
                   source_prefix: str = "") -> dict[str, LinTerm]:
        return {source_prefix + p: self.term(p) for p in places}


class NameGen:
    """Deterministic source of bound vector prefixes and scalars."""

    def __init__(self) -> None:
        self.n = 0

    def vec(self, places: Sequence[str]) -> VarVec:
        self.n += 1
        return VarVec(f"w{self.n}.", tuple(places))

    def scalar(self, stem: str = "k") -> str:
        self.n += 1
        return f"{stem}{self.n}"


# ---------------------------------------------------------------------------
# One-step relations
# ---------------------------------------------------------------------------

def enabledness(net: PetriNet, t: str, x: VarVec) -> Formula:
    """ENBL_t(x): x has at least the input tokens of t, on every place."""
    return F.conj(*(F.ge(x.term(p), F.const(net.pre_weight(t, p)))
                    for p in net.places))

def displacement(net: PetriNet, t: str, x: VarVec, x2: VarVec) -> Formula:
    """x2 = x + Post(t) - Pre(t), componentwise."""
    return F.conj(*(F.eq(x2.term(p),
                         x.term(p) + F.const(net.post_weight(t, p)
                                             - net.pre_weight(t, p)))
                    for p in net.places))

def labeled_step(net: PetriNet, coding: LabelCoding, x: VarVec, x2: VarVec,
                 avar: str) -> Formula:
    """T(x, x2, a): some observable transition with code a fires x -> x2."""
    return F.disj(*(F.conj(enabledness(net, t, x),
                           displacement(net, t, x, x2),
                           F.eq(F.var(avar), F.const(coding.code(net.label[t]))))
                    for t in net.observable_transitions()))

def silent_step(net: PetriNet, x: VarVec, x2: VarVec) -> Formula:
    """tau(x, x2): some silent transition fires x -> x2."""
    return F.disj(*(F.conj(enabledness(net, t, x),
                           displacement(net, t, x, x2))
                    for t in net.silent_transitions()))

def same_vector(x: VarVec, x2: VarVec) -> Formula:
    return F.conj(*(F.eq(x2.term(p), x.term(p)) for p in x.places))


# ---------------------------------------------------------------------------
# Silent-reachability predicates
# ---------------------------------------------------------------------------

class TauStar:
    """Binary predicate on marking vectors of one net.

    Implementations must be exact for silent reachability when the source
    vector satisfies the net's constraint; that is what the certificate
    checks establish.
    """

    form: str

    def at(self, x: VarVec, x2: VarVec, gen: NameGen) -> Formula:
        raise NotImplementedError


@dataclass(frozen=True)
class _SeqData:
    sequence: tuple[str, ...]
    hurdle: tuple[int, ...]
    delta: tuple[int, ...]
    debt: tuple[int, ...]  # positive part of -delta: per-iteration budget


class CertificateTauStar(TauStar):
    """Silent reachability encoded from a flat certificate.

    With sequences s1..sn the predicate relates x to x2 when some word in
    s1* ... sn* fires from x to x2.  Each starred block contributes one
    repetition counter; the marking entering block i is the linear term
    u_i = x + sum_{j<i} k_j * D(s_j), so no intermediate vectors need to
    be quantified:

        exists k1..kn.
            /\\_i (k_i = 0  \\/  k_i >= 1 /\\ u_i >= H(s_i^k_i))
            /\\ x2 = x + sum_i k_i * D(s_i)

    where H(s^k) = H(s) + (k-1) * budget for k >= 1, the budget being the
    tokens s consumes on balance per extra round.
    """

    form = "certificate"

    def __init__(self, net: PetriNet, sequences: Sequence[Sequence[str]]) -> None:
        self.places = net.places
        data = []
        for seq in sequences:
            seq = tuple(seq)
            if not seq:
                raise EncodingError("certificate sequences must be non-empty")
            for t in seq:
                if t not in net.label:
                    raise EncodingError(f"unknown transition {t!r} in certificate")
                if not net.is_silent(t):
                    raise EncodingError(
                        f"certificate uses observable transition {t!r}")
            h, d = hurdle_delta(net, seq)
            debt = positive_part({p: -x for p, x in d.items()})
            data.append(_SeqData(seq,
                                 tuple(h[p] for p in net.places),
                                 tuple(d[p] for p in net.places),
                                 tuple(debt[p] for p in net.places)))
        self.data = tuple(data)

    @property
    def sequences(self) -> tuple[tuple[str, ...], ...]:
        return tuple(sd.sequence for sd in self.data)

    def at(self, x: VarVec, x2: VarVec, gen: NameGen) -> Formula:
        n = len(self.data)
        if n == 0:
            return same_vector(x, x2)
        ks = [gen.scalar() for _ in range(n)]
        conds = []
        for i, sd in enumerate(self.data):
            atoms = []
            for idx, p in enumerate(x.places):
                # u_i(p) >= H[p] + (k_i - 1) * debt[p], with the k_i term
                # moved left so both sides stay linear.
                lhs = x.term(p) + LinTerm.make({ks[i]: -sd.debt[idx]})
                for j in range(i):
                    dj = self.data[j].delta[idx]
                    if dj:
                        lhs = lhs + LinTerm.make({ks[j]: dj})
                atoms.append(F.ge(lhs, F.const(sd.hurdle[idx] - sd.debt[idx])))
            conds.append(F.disj(F.eq(F.var(ks[i]), 0),
                                F.conj(F.ge(F.var(ks[i]), 1), *atoms)))
        moves = []
        for idx, p in enumerate(x.places):
            rhs = x.term(p)
            for i, sd in enumerate(self.data):
                if sd.delta[idx]:
                    rhs = rhs + LinTerm.make({ks[i]: sd.delta[idx]})
            moves.append(F.eq(x2.term(p), rhs))
        return F.exists(tuple(ks), F.conj(*conds, *moves))


class LinkingTauStar(TauStar):
    """Silent reachability read off the linking constraint.

    Two markings of one net are related when some marking of the other net
    is linked to both.  Exact only once the certificate predicate has been
    proven to agree with this form; used because it avoids the repetition
    counters and is much cheaper to solve.
    """

    form = "linking"

    def __init__(self, e_tilde: Formula, own_prefix: str,
                 own_places: Sequence[str], other_prefix: str,
                 other_places: Sequence[str]) -> None:
        self.e_tilde = e_tilde
        self.own_prefix = own_prefix
        self.own_places = tuple(own_places)
        self.other_prefix = other_prefix
        self.other_places = tuple(other_places)

    def _link(self, own: VarVec, other: VarVec) -> Formula:
        mapping = own.subst_from(self.own_places, self.own_prefix)
        mapping.update(other.subst_from(self.other_places, self.other_prefix))
        return F.substitute(self.e_tilde, mapping)

    def at(self, x: VarVec, x2: VarVec, gen: NameGen) -> Formula:
        q = gen.vec(self.other_places)
        return F.exists(q.names(), F.conj(self._link(x, q), self._link(x2, q)))


# ---------------------------------------------------------------------------
# Rule encoding and queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoreQuery:
    kind: str
    subject: str       # "net1" / "net2" for per-net checks, "n1->n2" / "n2->n1"
    formula: Formula   # closed
    tau_form: str      # "certificate" / "linking" / "none"

    def __post_init__(self) -> None:
        stray = F.free_vars(self.formula)
        if stray:
            raise EncodingError(f"query is not closed: free {sorted(stray)}")


@dataclass(frozen=True)
class RuleEncoding:
    """Both nets, their constraints, the split linking constraint and the
    shared label coding of a candidate equivalence."""

    n1: PetriNet
    n2: PetriNet
    c1: Formula
    c2: Formula
    e_tilde: Formula   # over the NS1/NS2 namespaces
    coding: LabelCoding

    def net(self, which: int) -> PetriNet:
        return self.n1 if which == 1 else self.n2

    def constraint(self, which: int) -> Formula:
        return self.c1 if which == 1 else self.c2

    def prefix(self, which: int) -> str:
        return NS1 if which == 1 else NS2

    def subject(self, which: int) -> str:
        return f"net{which}"

    def constraint_at(self, which: int, x: VarVec) -> Formula:
        net = self.net(which)
        return F.substitute(self.constraint(which),
                            x.subst_from(net.places))

    def link_at(self, x1: VarVec, x2: VarVec) -> Formula:
        """The linking constraint with net-1 places read from ``x1`` and
        net-2 places from ``x2``."""
        mapping = x1.subst_from(self.n1.places, NS1)
        mapping.update(x2.subst_from(self.n2.places, NS2))
        return F.substitute(self.e_tilde, mapping)

    def link_for(self, src: int, x_src: VarVec, x_dst: VarVec) -> Formula:
        if src == 1:
            return self.link_at(x_src, x_dst)
        return self.link_at(x_dst, x_src)

    def linking_tau_star(self, which: int) -> LinkingTauStar:
        own = self.net(which)
        other = self.net(3 - which)
        return LinkingTauStar(self.e_tilde, self.prefix(which), own.places,
                              self.prefix(3 - which), other.places)


def _vec(i: int, places: Sequence[str]) -> VarVec:
    return VarVec(f"m{i}.", tuple(places))


def silent_then_label(enc: RuleEncoding, which: int, tau: TauStar,
                      x: VarVec, x2: VarVec, avar: str,
                      gen: NameGen) -> Formula:
    """Any number of silent steps, then one transition with code ``avar``."""
    mid = gen.vec(enc.net(which).places)
    return F.exists(
        mid.names(),
        F.conj(tau.at(x, mid, gen),
               labeled_step(enc.net(which), enc.coding, mid, x2, avar)))


def step_with_settling(enc: RuleEncoding, which: int, tau: TauStar,
                       x: VarVec, x2: VarVec, avar: str,
                       gen: NameGen) -> Formula:
    """Labeled step bracketed by silence, through a constraint marking.

    Either silence then a transition coded ``avar`` reaching a marking that
    satisfies the constraint, followed by more silence; or ``avar`` is 0
    and x2 is silently reachable from x.
    """
    mid = gen.vec(enc.net(which).places)
    via = F.exists(
        mid.names(),
        F.conj(silent_then_label(enc, which, tau, x, mid, avar, gen),
               enc.constraint_at(which, mid),
               tau.at(mid, x2, gen)))
    only_silent = F.conj(F.eq(F.var(avar), 0), tau.at(x, x2, gen))
    return F.disj(via, only_silent)


def coherence_query(enc: RuleEncoding, which: int, tau: TauStar) -> CoreQuery:
    """Every observable step from a constraint marking can settle back.

    F  := forall m0 m1 a. F1 => F2
    F1 := C(m0) /\\ 1 <= a <= |alphabet| /\\ [silence then a](m0, m1)
    F2 := exists m2. C(m2) /\\ [silence then a](m0, m2) /\\ tau*(m2, m1)
    """
    net = enc.net(which)
    gen = NameGen()
    m0, m1, m2 = _vec(0, net.places), _vec(1, net.places), _vec(2, net.places)
    a = "a"
    antecedent = F.conj(
        enc.constraint_at(which, m0),
        F.ge(F.var(a), 1), F.le(F.var(a), enc.coding.size),
        silent_then_label(enc, which, tau, m0, m1, a, gen))
    witness = F.exists(
        m2.names(),
        F.conj(enc.constraint_at(which, m2),
               silent_then_label(enc, which, tau, m0, m2, a, gen),
               tau.at(m2, m1, gen)))
    body = F.implies(antecedent, witness)
    closed = F.forall(m0.names() + m1.names() + (a,), body)
    return CoreQuery(CORE0, enc.subject(which), closed, tau.form)


def solvability_query(enc: RuleEncoding, src: int) -> CoreQuery:
    """Every source constraint marking is linked to a target one.

    F := forall m0. C_src(m0) => exists m1. link(m0, m1) /\\ C_dst(m1)
    """
    dst = 3 - src
    m0 = _vec(0, enc.net(src).places)
    m1 = _vec(1, enc.net(dst).places)
    body = F.implies(
        enc.constraint_at(src, m0),
        F.exists(m1.names(),
                 F.conj(enc.link_for(src, m0, m1),
                        enc.constraint_at(dst, m1))))
    closed = F.forall(m0.names(), body)
    return CoreQuery(CORE1, f"n{src}->n{dst}", closed, "none")


def stability_query(enc: RuleEncoding, src: int) -> CoreQuery:
    """Silent steps of the source net cannot break the link.

    F := forall m0 m1 m2. link(m0, m1) /\\ tau_src(m0, m2) => link(m2, m1)
    """
    dst = 3 - src
    m0 = _vec(0, enc.net(src).places)
    m1 = _vec(1, enc.net(dst).places)
    m2 = _vec(2, enc.net(src).places)
    body = F.implies(
        F.conj(enc.link_for(src, m0, m1),
               silent_step(enc.net(src), m0, m2)),
        enc.link_for(src, m2, m1))
    closed = F.forall(m0.names() + m1.names() + m2.names(), body)
    return CoreQuery(CORE2, f"n{src}->n{dst}", closed, "none")


def simulation_query(enc: RuleEncoding, src: int, tau_src: TauStar,
                     tau_dst: TauStar) -> CoreQuery:
    """Whatever the source does, linked target markings can follow.

    F  := forall m0 m1 a m2 m3. F1 => F2
    F1 := C_src(m0) /\\ link(m0, m1) /\\ C_dst(m1) /\\ 0 <= a <= |alphabet|
          /\\ [step with settling]_src(m0, m2, a) /\\ link(m2, m3)
    F2 := [step with settling]_dst(m1, m3, a)
    """
    dst = 3 - src
    gen = NameGen()
    m0 = _vec(0, enc.net(src).places)
    m1 = _vec(1, enc.net(dst).places)
    m2 = _vec(2, enc.net(src).places)
    m3 = _vec(3, enc.net(dst).places)
    a = "a"
    antecedent = F.conj(
        enc.constraint_at(src, m0),
        enc.link_for(src, m0, m1),
        enc.constraint_at(dst, m1),
        F.ge(F.var(a), 0), F.le(F.var(a), enc.coding.size),
        step_with_settling(enc, src, tau_src, m0, m2, a, gen),
        enc.link_for(src, m2, m3))
    consequent = step_with_settling(enc, dst, tau_dst, m1, m3, a, gen)
    closed = F.forall(m0.names() + m1.names() + (a,) + m2.names() + m3.names(),
                      F.implies(antecedent, consequent))
    form = tau_src.form if tau_src.form == tau_dst.form else "mixed"
    return CoreQuery(CORE3, f"n{src}->n{dst}", closed, form)


def reflexivity_query(enc: RuleEncoding, which: int, tau: TauStar) -> CoreQuery:
    """F := forall m0. C(m0) => tau*(m0, m0)"""
    gen = NameGen()
    m0 = _vec(0, enc.net(which).places)
    body = F.implies(enc.constraint_at(which, m0), tau.at(m0, m0, gen))
    return CoreQuery(TAU_REFLEXIVE, enc.subject(which),
                     F.forall(m0.names(), body), tau.form)


def closure_query(enc: RuleEncoding, which: int, tau: TauStar) -> CoreQuery:
    """One more silent step out of tau* stays inside tau*.

    F := forall m0 m1 m2.
         C(m0) /\\ tau*(m0, m1) /\\ tau(m1, m2) => tau*(m0, m2)
    """
    net = enc.net(which)
    gen = NameGen()
    m0, m1, m2 = _vec(0, net.places), _vec(1, net.places), _vec(2, net.places)
    body = F.implies(
        F.conj(enc.constraint_at(which, m0),
               tau.at(m0, m1, gen),
               silent_step(net, m1, m2)),
        tau.at(m0, m2, gen))
    closed = F.forall(m0.names() + m1.names() + m2.names(), body)
    return CoreQuery(TAU_CLOSURE, enc.subject(which), closed, tau.form)


def agreement_query(enc: RuleEncoding, which: int, tau: TauStar) -> CoreQuery:
    """Certificate predicate coincides with the linking-derived relation.

    F := forall m0 m1. C(m0) =>
         ((exists m2. link(m0, m2) /\\ link(m1, m2)) <=> tau*(m0, m1))
    """
    net = enc.net(which)
    gen = NameGen()
    m0, m1 = _vec(0, net.places), _vec(1, net.places)
    linking = enc.linking_tau_star(which)
    body = F.implies(enc.constraint_at(which, m0),
                     F.iff(linking.at(m0, m1, gen), tau.at(m0, m1, gen)))
    closed = F.forall(m0.names() + m1.names(), body)
    return CoreQuery(TAU_EQUIV, enc.subject(which), closed, tau.form)


def enlargement_probe(enc: RuleEncoding, which: int, tau: CertificateTauStar,
                      candidate: Sequence[str]) -> CoreQuery:
    """No new marking appears when ``candidate`` fires once after tau*.

    The query is the universal closure of the negated escape condition, so
    an "invalid" outcome means the candidate strictly enlarges coverage
    and its countermodel is an escape witness.

    F := forall m0 m1 m2. not (C(m0) /\\ tau*(m0, m1)
         /\\ [candidate fires once](m1, m2) /\\ not tau*(m0, m2))
    """
    net = enc.net(which)
    gen = NameGen()
    m0, m1, m2 = _vec(0, net.places), _vec(1, net.places), _vec(2, net.places)
    h, d = hurdle_delta(net, candidate)
    fires_once = F.conj(
        *(F.ge(m1.term(p), F.const(h[p])) for p in net.places),
        *(F.eq(m2.term(p), m1.term(p) + F.const(d[p])) for p in net.places))
    escape = F.conj(enc.constraint_at(which, m0),
                    tau.at(m0, m1, gen),
                    fires_once,
                    F.neg(tau.at(m0, m2, gen)))
    closed = F.forall(m0.names() + m1.names() + m2.names(), F.neg(escape))
    return CoreQuery(PROBE, enc.subject(which), closed, tau.form)


def core_queries(enc: RuleEncoding, tau1: TauStar,
                 tau2: TauStar) -> list[CoreQuery]:
    """The eight queries whose joint validity decides the equivalence."""
    return [
        coherence_query(enc, 1, tau1),
        coherence_query(enc, 2, tau2),
        solvability_query(enc, 1),
        solvability_query(enc, 2),
        stability_query(enc, 1),
        stability_query(enc, 2),
        simulation_query(enc, 1, tau1, tau2),
        simulation_query(enc, 2, tau2, tau1),
    ]
