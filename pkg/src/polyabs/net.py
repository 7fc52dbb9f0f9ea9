"""Petri nets with weighted arcs and silent/observable transition labels.

Markings are plain ``dict[str, int]`` over the net's places.  A label of
``None`` marks a silent transition; any string is an observable symbol.
Nets are immutable after construction; structural operations return new
nets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence


Marking = dict[str, int]


def _normalize_flows(flows: Mapping[str, Mapping[str, int]],
                     transitions: Sequence[str],
                     places: Sequence[str], what: str) -> dict[str, dict[str, int]]:
    out: dict[str, dict[str, int]] = {}
    place_set = set(places)
    for t in transitions:
        row = {}
        for p, w in flows.get(t, {}).items():
            if p not in place_set:
                raise ValueError(f"{what} of {t!r} mentions unknown place {p!r}")
            if w < 0:
                raise ValueError(f"{what} weight of ({t!r}, {p!r}) is negative")
            if w > 0:
                row[p] = w
        out[t] = row
    return out


@dataclass(frozen=True)
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[str, ...]
    pre: dict[str, dict[str, int]]
    post: dict[str, dict[str, int]]
    label: dict[str, Optional[str]]
    name: str = ""

    def __post_init__(self) -> None:
        if len(set(self.places)) != len(self.places):
            raise ValueError("duplicate place identifiers")
        if len(set(self.transitions)) != len(self.transitions):
            raise ValueError("duplicate transition identifiers")
        if set(self.places) & set(self.transitions):
            raise ValueError("place and transition identifiers overlap")
        object.__setattr__(
            self, "pre", _normalize_flows(self.pre, self.transitions,
                                          self.places, "pre"))
        object.__setattr__(
            self, "post", _normalize_flows(self.post, self.transitions,
                                           self.places, "post"))
        labels = {t: self.label.get(t) for t in self.transitions}
        object.__setattr__(self, "label", labels)

    # -- accessors ---------------------------------------------------------

    def pre_weight(self, t: str, p: str) -> int:
        return self.pre[t].get(p, 0)

    def post_weight(self, t: str, p: str) -> int:
        return self.post[t].get(p, 0)

    def is_silent(self, t: str) -> bool:
        return self.label[t] is None

    def silent_transitions(self) -> tuple[str, ...]:
        return tuple(t for t in self.transitions if self.is_silent(t))

    def observable_transitions(self) -> tuple[str, ...]:
        return tuple(t for t in self.transitions if not self.is_silent(t))

    def alphabet(self) -> tuple[str, ...]:
        """Observable symbols, sorted."""
        return tuple(sorted({l for l in self.label.values() if l is not None}))

    def check_marking(self, m: Mapping[str, int]) -> None:
        if set(m) != set(self.places):
            raise ValueError("marking domain does not match the net's places")
        for p, k in m.items():
            if k < 0:
                raise ValueError(f"negative token count on {p!r}")

    def zero_marking(self) -> Marking:
        return {p: 0 for p in self.places}

    # -- firing ------------------------------------------------------------

    def enabled(self, m: Mapping[str, int], t: str) -> bool:
        if t not in self.pre:
            raise ValueError(f"unknown transition {t!r}")
        return all(m[p] >= w for p, w in self.pre[t].items())

    def fire(self, m: Mapping[str, int], t: str) -> Optional[Marking]:
        """Successor marking, or None when ``t`` is not enabled at ``m``."""
        if not self.enabled(m, t):
            return None
        out = dict(m)
        for p, w in self.pre[t].items():
            out[p] -= w
        for p, w in self.post[t].items():
            out[p] += w
        return out

    def fire_sequence(self, m: Mapping[str, int],
                      seq: Sequence[str]) -> Optional[Marking]:
        out: Optional[Marking] = dict(m)
        for t in seq:
            out = self.fire(out, t)
            if out is None:
                return None
        return out

    def word_of(self, seq: Sequence[str]) -> tuple[str, ...]:
        """Observable word of a firing sequence (silent steps dropped)."""
        return tuple(self.label[t] for t in seq if not self.is_silent(t))

    # -- structural operations ---------------------------------------------

    def remove_labeled(self, a: str) -> "PetriNet":
        """Drop every transition labeled ``a``; silent transitions stay."""
        doomed = {t for t in self.transitions if self.label[t] == a}
        if not doomed:
            warnings.warn(f"no transition is labeled {a!r}; net unchanged",
                          stacklevel=2)
            return self
        kept = tuple(t for t in self.transitions if t not in doomed)
        return PetriNet(self.places, kept,
                        {t: self.pre[t] for t in kept},
                        {t: self.post[t] for t in kept},
                        {t: self.label[t] for t in kept},
                        self.name)

    def duplicate_labeled(self, a: str, b: str) -> "PetriNet":
        """Copy every transition labeled ``a``; copies are labeled ``b``."""
        if a is None or b is None:
            raise ValueError("duplication works on observable labels only")
        new_ids = []
        pre = dict(self.pre)
        post = dict(self.post)
        label: dict[str, Optional[str]] = dict(self.label)
        taken = set(self.transitions) | set(self.places)
        for t in self.transitions:
            if self.label[t] != a:
                continue
            copy = f"{t}#{b}"
            while copy in taken:
                copy += "'"
            taken.add(copy)
            new_ids.append(copy)
            pre[copy] = dict(self.pre[t])
            post[copy] = dict(self.post[t])
            label[copy] = b
        return PetriNet(self.places, self.transitions + tuple(new_ids),
                        pre, post, label, self.name)

    def relabel(self, a: str, b: Optional[str]) -> "PetriNet":
        """Replace label ``a`` by ``b`` (``None`` silences the transitions)."""
        label = {t: (b if l == a else l) for t, l in self.label.items()}
        return PetriNet(self.places, self.transitions, self.pre, self.post,
                        label, self.name)


def synchronous_product(n1: PetriNet, n2: PetriNet) -> PetriNet:
    """Label-synchronized product over disjoint place sets.

    Transitions with a label shared by both alphabets fire as pairs with
    summed pre/post; silent transitions and observable transitions whose
    label the other side lacks interleave unchanged.
    """
    overlap = set(n1.places) & set(n2.places)
    if overlap:
        raise ValueError(f"product requires disjoint places, got shared "
                         f"{sorted(overlap)}")
    shared = set(n1.alphabet()) & set(n2.alphabet())

    ids: list[str] = []
    pre: dict[str, dict[str, int]] = {}
    post: dict[str, dict[str, int]] = {}
    label: dict[str, Optional[str]] = {}

    def add(tid: str, pr: dict[str, int], po: dict[str, int],
            lab: Optional[str]) -> None:
        while tid in pre:
            tid += "~"
        ids.append(tid)
        pre[tid] = pr
        post[tid] = po
        label[tid] = lab

    for t in n1.transitions:
        if n1.label[t] not in shared:
            add(t, dict(n1.pre[t]), dict(n1.post[t]), n1.label[t])
    for t in n2.transitions:
        if n2.label[t] not in shared:
            add(t, dict(n2.pre[t]), dict(n2.post[t]), n2.label[t])
    for t1 in n1.transitions:
        a = n1.label[t1]
        if a not in shared:
            continue
        for t2 in n2.transitions:
            if n2.label[t2] != a:
                continue
            add(f"{t1}|{t2}",
                {**n1.pre[t1], **n2.pre[t2]},
                {**n1.post[t1], **n2.post[t2]}, a)

    return PetriNet(n1.places + n2.places, tuple(ids), pre, post, label,
                    f"{n1.name}||{n2.name}")


# ---------------------------------------------------------------------------
# Hurdle and displacement of firing sequences
# ---------------------------------------------------------------------------

def positive_part(v: Mapping[str, int]) -> dict[str, int]:
    return {p: max(0, x) for p, x in v.items()}


def hurdle_delta(net: PetriNet,
                 seq: Sequence[str]) -> tuple[dict[str, int], dict[str, int]]:
    """Minimal enabling marking H and token effect D of a sequence.

    For every marking m: the sequence fires from m iff m >= H, and then
    ends in m + D.  Composition: H(u.v) = max(H(u), H(v) - D(u)) and
    D(u.v) = D(u) + D(v), folded one transition at a time.
    """
    h = {p: 0 for p in net.places}
    d = {p: 0 for p in net.places}
    for t in seq:
        if t not in net.pre:
            raise ValueError(f"unknown transition {t!r}")
        for p in net.places:
            h[p] = max(h[p], net.pre_weight(t, p) - d[p])
            d[p] += net.post_weight(t, p) - net.pre_weight(t, p)
    return h, d


def power_hurdle_delta(net: PetriNet, seq: Sequence[str],
                       k: int) -> tuple[dict[str, int], dict[str, int]]:
    """Closed-form H and D of ``seq`` repeated ``k`` times.

    For k >= 1 each extra round must budget the tokens the sequence
    consumes on balance, so H(seq^k) = H(seq) + (k-1) * (-D(seq))^+ and
    D(seq^k) = k * D(seq); for k = 0 both are zero.
    """
    if k < 0:
        raise ValueError("repetition count must be a natural number")
    h, d = hurdle_delta(net, seq)
    if k == 0:
        zero = {p: 0 for p in net.places}
        return zero, dict(zero)
    debt = positive_part({p: -x for p, x in d.items()})
    hk = {p: h[p] + (k - 1) * debt[p] for p in net.places}
    dk = {p: k * d[p] for p in net.places}
    return hk, dk


# ---------------------------------------------------------------------------
# Structural comparison (used by tests and the operation laws)
# ---------------------------------------------------------------------------

def _signature(net: PetriNet, t: str) -> tuple:
    lab = net.label[t]
    return ((0, "") if lab is None else (1, lab),
            tuple(sorted(net.pre[t].items())),
            tuple(sorted(net.post[t].items())))


def isomorphic_fixed_places(n1: PetriNet, n2: PetriNet) -> bool:
    """Equality up to transition renaming, with place names fixed."""
    if set(n1.places) != set(n2.places):
        return False
    if len(n1.transitions) != len(n2.transitions):
        return False
    sig1 = sorted(_signature(n1, t) for t in n1.transitions)
    sig2 = sorted(_signature(n2, t) for t in n2.transitions)
    return sig1 == sig2
