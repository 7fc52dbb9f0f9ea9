"""Bounded explicit-state reference checks.

Everything here enumerates markings with token counts up to a bound and
explores firings by breadth-first search.  Verdicts are therefore
one-sided: a counterexample is real, but "ok" only means no counterexample
within the bound (truncation is reported).  These checks cross-validate
the solver pipeline at desk scale and never replace it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Mapping, Optional

from . import formula as F
from .encode import NameGen, TauStar, VarVec
from .formula import Formula, eval_formula
from .net import Marking, PetriNet


@dataclass(frozen=True)
class Bound:
    max_tokens: int = 6
    max_depth: int = 12

    def __post_init__(self) -> None:
        if self.max_tokens < 1 or self.max_depth < 1:
            raise ValueError("bounds must be >= 1")


MarkingTuple = tuple[int, ...]


def to_tuple(net: PetriNet, m: Mapping[str, int]) -> MarkingTuple:
    return tuple(m[p] for p in net.places)


def to_marking(net: PetriNet, t: MarkingTuple) -> Marking:
    return dict(zip(net.places, t))


def _within(t: MarkingTuple, max_tokens: int) -> bool:
    return all(x <= max_tokens for x in t)


# ---------------------------------------------------------------------------
# Bounded enumeration of constraint markings
# ---------------------------------------------------------------------------

def _tighten(constraint: Formula, names: tuple[str, ...],
             cap: int) -> Optional[dict[str, int]]:
    """Per-variable upper bounds read off top-level conjuncts.

    Only the pattern "positive combination of variables compared to a
    constant" is used; anything else is ignored.  Returns None when a
    conjunct is already unsatisfiable over naturals.
    """
    ub = {n: cap for n in names}
    unsat = False

    def bound_by(term, limit: int) -> None:
        nonlocal unsat
        slack = limit - term.const
        if slack < 0:
            unsat = True
            return
        for v, c in term.coeffs:
            if v in ub:
                ub[v] = min(ub[v], slack // c)

    def visit(g: Formula) -> None:
        if isinstance(g, F.And):
            for s in g.subs:
                visit(s)
            return
        if not isinstance(g, F.Cmp):
            return
        for term, other, op in ((g.lhs, g.rhs, g.op),
                                (g.rhs, g.lhs, {"<=": ">=", "<": ">",
                                                ">=": "<=", ">": "<",
                                                "=": "="}[g.op])):
            if other.coeffs or not term.coeffs:
                continue
            if any(c <= 0 for _, c in term.coeffs):
                continue
            if op in ("=", "<="):
                bound_by(term, other.const)
            elif op == "<":
                bound_by(term, other.const - 1)

    visit(constraint)
    return None if unsat else ub


def bounded_models(constraint: Formula, names: tuple[str, ...],
                   cap: int) -> Iterator[MarkingTuple]:
    """Satisfying tuples with components <= cap, pruned by bound tightening."""
    stray = F.free_vars(constraint) - set(names)
    if stray:
        raise ValueError(f"free variables not enumerated: {sorted(stray)}")
    ub = _tighten(constraint, names, cap)
    if ub is None:
        return
    ranges = [range(ub[n] + 1) for n in names]
    for values in product(*ranges):
        if eval_formula(constraint, dict(zip(names, values)),
                        quantifier_bound=cap):
            yield values


def constraint_markings(net: PetriNet, constraint: Formula,
                        bound: Bound) -> list[MarkingTuple]:
    return sorted(bounded_models(constraint, net.places, bound.max_tokens))


def enumeration_size(constraint: Formula, names: tuple[str, ...],
                     cap: int) -> int:
    ub = _tighten(constraint, names, cap)
    if ub is None:
        return 0
    size = 1
    for n in names:
        size *= ub[n] + 1
    return size


# ---------------------------------------------------------------------------
# Explicit-state exploration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReachSet:
    markings: frozenset[MarkingTuple]
    truncated: bool


def silent_reach(net: PetriNet, m: Mapping[str, int], bound: Bound) -> ReachSet:
    """BFS closure under silent transitions, clipped at the token bound."""
    start = to_tuple(net, m)
    if not _within(start, bound.max_tokens):
        return ReachSet(frozenset(), True)
    seen = {start}
    queue = deque([start])
    truncated = False
    while queue:
        here = to_marking(net, queue.popleft())
        for t in net.silent_transitions():
            nxt = net.fire(here, t)
            if nxt is None:
                continue
            tup = to_tuple(net, nxt)
            if not _within(tup, bound.max_tokens):
                truncated = True
            elif tup not in seen:
                seen.add(tup)
                queue.append(tup)
    return ReachSet(frozenset(seen), truncated)


def label_step(net: PetriNet, m: Mapping[str, int],
               symbol: str) -> Iterator[MarkingTuple]:
    """Successors by one transition carrying ``symbol``."""
    for t in net.transitions:
        if net.label[t] != symbol:
            continue
        nxt = net.fire(m, t)
        if nxt is not None:
            yield to_tuple(net, nxt)


def silent_then_label(net: PetriNet, m: Mapping[str, int], symbol: str,
                      bound: Bound) -> tuple[set[MarkingTuple], bool]:
    """Markings reached by silence followed by one ``symbol`` transition."""
    reach = silent_reach(net, m, bound)
    out: set[MarkingTuple] = set()
    truncated = reach.truncated
    for tup in reach.markings:
        for nxt in label_step(net, to_marking(net, tup), symbol):
            if _within(nxt, bound.max_tokens):
                out.add(nxt)
            else:
                truncated = True
    return out, truncated


def observable_step_closure(net: PetriNet, m: Mapping[str, int], symbol: str,
                            bound: Bound) -> tuple[set[MarkingTuple], bool]:
    """Markings reached by silence, one ``symbol`` transition, silence."""
    mids, truncated = silent_then_label(net, m, symbol, bound)
    out: set[MarkingTuple] = set()
    for mid in mids:
        reach = silent_reach(net, to_marking(net, mid), bound)
        truncated = truncated or reach.truncated
        out |= reach.markings
    return out, truncated


def word_closure(net: PetriNet, m: Mapping[str, int], word: Iterable[str],
                 bound: Bound) -> tuple[set[MarkingTuple], bool]:
    """Markings reached by an observable word (silence interleaved)."""
    reach = silent_reach(net, m, bound)
    current, truncated = set(reach.markings), reach.truncated
    for symbol in word:
        nxt: set[MarkingTuple] = set()
        for tup in current:
            step, trunc = observable_step_closure(
                net, to_marking(net, tup), symbol, bound)
            nxt |= step
            truncated = truncated or trunc
        current = nxt
    return current, truncated


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckOutcome:
    ok: bool
    counterexample: Optional[tuple] = None
    truncated: bool = False
    note: str = ""


def check_coherency(net: PetriNet, constraint: Formula,
                    bound: Bound) -> CheckOutcome:
    """Observable steps from constraint markings can settle back.

    For every m satisfying the constraint and every m' reached by silence
    then one labeled transition, some m'' satisfying the constraint must be
    reached the same way with m' silently reachable from m''.  A pair is
    reported as a counterexample only when its exploration stayed within
    the token bound.
    """
    truncated = False
    for start in constraint_markings(net, constraint, bound):
        m = to_marking(net, start)
        for symbol in net.alphabet():
            reached, local_trunc = silent_then_label(net, m, symbol, bound)
            if not reached:
                truncated = truncated or local_trunc
                continue
            settled: set[MarkingTuple] = set()
            for mid in reached:
                if eval_formula(constraint, to_marking(net, mid),
                                quantifier_bound=bound.max_tokens):
                    reach = silent_reach(net, to_marking(net, mid), bound)
                    local_trunc = local_trunc or reach.truncated
                    settled |= reach.markings
            truncated = truncated or local_trunc
            for target in sorted(reached):
                if target not in settled:
                    if local_trunc:
                        break  # escape may be an artifact of clipping
                    return CheckOutcome(False,
                                        (m, symbol, to_marking(net, target)),
                                        truncated)
    return CheckOutcome(True, truncated=truncated)


def related_up_to(e: Formula, shared: Iterable[str], m1: Mapping[str, int],
                  m2: Mapping[str, int], quantifier_bound: int) -> bool:
    """Compatibility on shared places plus satisfaction of the constraint."""
    for p in shared:
        if m1[p] != m2[p]:
            return False
    env = dict(m2)
    env.update(m1)
    return eval_formula(e, env, quantifier_bound=quantifier_bound)


def witness_bound(bound: Bound, places: Iterable[str]) -> int:
    # Linked markings can aggregate tokens of several places, so witnesses
    # are searched in a larger box than the primary enumeration.
    return bound.max_tokens * max(1, len(tuple(places))) + 4


@dataclass(frozen=True)
class RuleFacts:
    """The pieces of a candidate rule the oracle needs."""

    n1: PetriNet
    n2: PetriNet
    c1: Formula
    c2: Formula
    e: Formula  # over raw place names of both nets

    @property
    def shared(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.n1.places) & set(self.n2.places)))

    def side(self, which: int) -> tuple[PetriNet, Formula]:
        return (self.n1, self.c1) if which == 1 else (self.n2, self.c2)

    def related(self, m1: Mapping[str, int], m2: Mapping[str, int],
                quantifier_bound: int) -> bool:
        return related_up_to(self.e, self.shared, m1, m2, quantifier_bound)


def _linked_partners(rule: RuleFacts, src: int, m_src: Marking,
                     c_dst: Formula, other: PetriNet, cap: int,
                     require_constraint: bool) -> Iterator[Marking]:
    for cand in bounded_models(c_dst if require_constraint else F.TRUE,
                               other.places, cap):
        m_dst = to_marking(other, cand)
        m1, m2 = (m_src, m_dst) if src == 1 else (m_dst, m_src)
        if rule.related(m1, m2, cap):
            yield m_dst


def check_solvability(rule: RuleFacts, src: int, bound: Bound) -> CheckOutcome:
    """Every source constraint marking has a linked target marking."""
    net, c_src = rule.side(src)
    other, c_dst = rule.side(3 - src)
    wit = witness_bound(bound, net.places)
    for start in constraint_markings(net, c_src, bound):
        m_src = to_marking(net, start)
        found = any(True for _ in _linked_partners(rule, src, m_src, c_dst,
                                                   other, wit, True))
        if not found:
            return CheckOutcome(False, (m_src,),
                                note="no linked target marking within bound")
    return CheckOutcome(True)


def check_silent_stability(rule: RuleFacts, src: int,
                           bound: Bound) -> CheckOutcome:
    """Single silent steps of the source preserve the link."""
    net, _ = rule.side(src)
    other, _ = rule.side(3 - src)
    wit = witness_bound(bound, net.places)
    box = product(range(bound.max_tokens + 1), repeat=len(net.places))
    for src_tuple in box:
        m_src = to_marking(net, src_tuple)
        succs = [(t, net.fire(m_src, t)) for t in net.silent_transitions()]
        succs = [(t, s) for t, s in succs if s is not None]
        if not succs:
            continue
        for dst_tuple in product(range(bound.max_tokens + 1),
                                 repeat=len(other.places)):
            m_dst = to_marking(other, dst_tuple)
            m1, m2 = (m_src, m_dst) if src == 1 else (m_dst, m_src)
            if not rule.related(m1, m2, wit):
                continue
            for t, succ in succs:
                s1, s2 = (succ, m_dst) if src == 1 else (m_dst, succ)
                if not rule.related(s1, s2, wit):
                    return CheckOutcome(False, (m_src, m_dst, t))
    return CheckOutcome(True)


def settling_word_closure(net: PetriNet, constraint: Formula,
                          m: Mapping[str, int], word: Iterable[str],
                          bound: Bound) -> tuple[set[MarkingTuple], bool]:
    """Like word_closure, but each labeled step must pass through a
    marking satisfying the constraint before trailing silence.

    This is the step relation the solver queries encode; on a coherent
    net it coincides with plain observable reachability.
    """
    reach = silent_reach(net, m, bound)
    current, truncated = set(reach.markings), reach.truncated
    for symbol in word:
        settled: set[MarkingTuple] = set()
        for tup in current:
            mids, trunc = silent_then_label(net, to_marking(net, tup),
                                            symbol, bound)
            truncated = truncated or trunc
            for mid in mids:
                mid_m = to_marking(net, mid)
                if not eval_formula(constraint, mid_m,
                                    quantifier_bound=bound.max_tokens):
                    continue
                after = silent_reach(net, mid_m, bound)
                truncated = truncated or after.truncated
                settled |= after.markings
        current = settled
    return current, truncated


def check_simulation(rule: RuleFacts, src: int, bound: Bound) -> CheckOutcome:
    """Linked targets can follow each source word of length <= 1.

    Steps are taken in the settling sense on both sides (silence, one
    labeled transition reaching a constraint marking, silence again),
    mirroring the symbolic simulation queries.
    """
    net, c_src = rule.side(src)
    other, c_dst = rule.side(3 - src)
    wit = witness_bound(bound, net.places)
    wit_bound = Bound(wit, bound.max_depth)
    truncated = False
    for start in constraint_markings(net, c_src, bound):
        m_src = to_marking(net, start)
        partners = list(_linked_partners(rule, src, m_src, c_dst, other,
                                         wit, True))
        words = [()] + [(a,) for a in net.alphabet()]
        for word in words:
            reached, trunc = settling_word_closure(net, c_src, m_src, word,
                                                   bound)
            truncated = truncated or trunc
            for m1_after_tuple in sorted(reached):
                m1_after = to_marking(net, m1_after_tuple)
                for m_dst in partners:
                    follow, trunc2 = settling_word_closure(
                        other, c_dst, m_dst, word, wit_bound)
                    for cand in bounded_models(F.TRUE, other.places, wit):
                        m2_after = to_marking(other, cand)
                        s1, s2 = ((m1_after, m2_after) if src == 1
                                  else (m2_after, m1_after))
                        if not rule.related(s1, s2, wit):
                            continue
                        if to_tuple(other, m2_after) not in follow:
                            if trunc2:
                                truncated = True
                                continue
                            return CheckOutcome(
                                False,
                                (m_src, m_dst, word, m1_after, m2_after),
                                truncated)
    return CheckOutcome(True, truncated=truncated)


def check_instantiation(rule: RuleFacts, m1: Marking, m2: Marking,
                        bound: Bound) -> CheckOutcome:
    """Bounded check that the marking pair (m1, m2) is abstracted soundly.

    The markings must be linked, and every observable word of the first
    net (explored to the depth bound) must lead only to markings whose
    linked counterparts the second net reaches by the same word.
    """
    wit = witness_bound(bound, rule.n1.places)
    if not rule.related(m1, m2, wit):
        return CheckOutcome(False, (m1, m2),
                            note="initial markings are not linked")
    wit_bound = Bound(wit, bound.max_depth)
    truncated = False
    base, trunc = word_closure(rule.n1, m1, (), bound)
    truncated = truncated or trunc
    frontier: dict[tuple[str, ...], set[MarkingTuple]] = {(): base}
    for depth in range(bound.max_depth + 1):
        bad = _check_words(rule, m2, frontier, wit, wit_bound)
        if bad is not None:
            return CheckOutcome(False, bad, truncated)
        if depth == bound.max_depth:
            break
        nxt: dict[tuple[str, ...], set[MarkingTuple]] = {}
        for word, markings in frontier.items():
            for symbol in rule.n1.alphabet():
                grown: set[MarkingTuple] = set()
                for tup in markings:
                    step, trunc = observable_step_closure(
                        rule.n1, to_marking(rule.n1, tup), symbol, bound)
                    grown |= step
                    truncated = truncated or trunc
                if grown:
                    nxt[word + (symbol,)] = grown
        if not nxt:
            break
        frontier = nxt
    return CheckOutcome(True, truncated=truncated)


def _check_words(rule: RuleFacts, m2: Marking,
                 frontier: dict[tuple[str, ...], set[MarkingTuple]],
                 wit: int, wit_bound: Bound) -> Optional[tuple]:
    for word, markings in sorted(frontier.items()):
        follow, trunc = word_closure(rule.n2, m2, word, wit_bound)
        for tup in sorted(markings):
            m1_after = to_marking(rule.n1, tup)
            linked = list(_linked_partners(rule, 1, m1_after, F.TRUE,
                                           rule.n2, wit, False))
            if not linked:
                return (word, m1_after, "no linked counterpart")
            for m2_after in linked:
                if to_tuple(rule.n2, m2_after) not in follow and not trunc:
                    return (word, m1_after, m2_after)
    return None


# ---------------------------------------------------------------------------
# Cross-checks against the symbolic side
# ---------------------------------------------------------------------------

def tau_star_matches_bfs(net: PetriNet, constraint: Formula, tau: TauStar,
                         bound: Bound) -> CheckOutcome:
    """Certified predicate equals BFS silent reachability within the bound."""
    gen = NameGen()
    x = VarVec("u.", net.places)
    x2 = VarVec("v.", net.places)
    pred = tau.at(x, x2, gen)
    qbound = bound.max_tokens * max(1, len(net.places)) + 2
    truncated = False
    for start in constraint_markings(net, constraint, bound):
        m = to_marking(net, start)
        reach = silent_reach(net, m, bound)
        truncated = truncated or reach.truncated
        env = {x.name(p): m[p] for p in net.places}
        for cand in product(range(bound.max_tokens + 1),
                            repeat=len(net.places)):
            env2 = dict(env)
            env2.update({x2.name(p): v for p, v in zip(net.places, cand)})
            pred_says = eval_formula(pred, env2, quantifier_bound=qbound)
            bfs_says = cand in reach.markings
            if pred_says != bfs_says and not (reach.truncated and pred_says):
                return CheckOutcome(False, (m, to_marking(net, cand),
                                            pred_says, bfs_says), truncated)
    return CheckOutcome(True, truncated=truncated)


def reachability_matches_constraint(net: PetriNet, constraint: Formula,
                                    solutions: Formula,
                                    bound: Bound) -> CheckOutcome:
    """Silent reachability from the constraint equals a solution set."""
    reachable: set[MarkingTuple] = set()
    truncated = False
    for start in constraint_markings(net, constraint, bound):
        reach = silent_reach(net, to_marking(net, start), bound)
        truncated = truncated or reach.truncated
        reachable |= reach.markings
    described = set(bounded_models(solutions, net.places, bound.max_tokens))
    if reachable == described:
        return CheckOutcome(True, truncated=truncated)
    extra = sorted(described - reachable)
    missing = sorted(reachable - described)
    return CheckOutcome(False, (missing[:3], extra[:3]), truncated,
                        note=f"{len(missing)} reachable not described, "
                             f"{len(extra)} described not reachable")
