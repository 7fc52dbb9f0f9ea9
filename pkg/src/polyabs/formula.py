"""Linear-integer-arithmetic formulas over natural-valued variables.

The AST covers the fragment needed to express marking predicates and the
generated verification queries: linear terms, comparisons, boolean
connectives and quantifiers ranging over naturals.  Values are immutable;
every operation returns a new formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Optional, Union


class UnboundedQuantifier(Exception):
    """Raised when a quantifier must be enumerated but no bound was given."""


# ---------------------------------------------------------------------------
# Linear terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinTerm:
    """Sum of coefficient*variable pairs plus an integer constant.

    Coefficients are stored sorted by variable name with zero entries
    dropped, so structurally equal terms compare equal.
    """

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def make(coeffs: Mapping[str, int], const: int = 0) -> "LinTerm":
        items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return LinTerm(items, const)

    def coeff_map(self) -> dict[str, int]:
        return dict(self.coeffs)

    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def is_const(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LinTerm") -> "LinTerm":
        merged = self.coeff_map()
        for v, c in other.coeffs:
            merged[v] = merged.get(v, 0) + c
        return LinTerm.make(merged, self.const + other.const)

    def __sub__(self, other: "LinTerm") -> "LinTerm":
        return self + other.scale(-1)

    def scale(self, k: int) -> "LinTerm":
        return LinTerm.make({v: k * c for v, c in self.coeffs}, k * self.const)

    def value(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[v] for v, c in self.coeffs)

    def rename(self, mapping: Mapping[str, str]) -> "LinTerm":
        merged: dict[str, int] = {}
        for v, c in self.coeffs:
            w = mapping.get(v, v)
            merged[w] = merged.get(w, 0) + c
        return LinTerm.make(merged, self.const)

    def __str__(self) -> str:
        parts = []
        for v, c in self.coeffs:
            if c == 1:
                parts.append(v)
            else:
                parts.append(f"{c}*{v}")
        if self.const != 0 or not parts:
            parts.append(str(self.const))
        return " + ".join(parts).replace("+ -", "- ")


def var(name: str) -> LinTerm:
    return LinTerm(((name, 1),), 0)


def const(k: int) -> LinTerm:
    return LinTerm((), k)


Termish = Union[LinTerm, int, str]


def as_term(t: Termish) -> LinTerm:
    if isinstance(t, LinTerm):
        return t
    if isinstance(t, int):
        return const(t)
    if isinstance(t, str):
        return var(t)
    raise TypeError(f"cannot interpret {t!r} as a linear term")


# ---------------------------------------------------------------------------
# Formula nodes
# ---------------------------------------------------------------------------

class Formula:
    """Base class; concrete nodes are the dataclasses below."""

    __slots__ = ()


@dataclass(frozen=True)
class BoolLit(Formula):
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


TRUE = BoolLit(True)
FALSE = BoolLit(False)

CMP_OPS = ("=", "<=", "<", ">=", ">")


@dataclass(frozen=True)
class Cmp(Formula):
    op: str
    lhs: LinTerm
    rhs: LinTerm

    def __post_init__(self) -> None:
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def holds(self, lv: int, rv: int) -> bool:
        if self.op == "=":
            return lv == rv
        if self.op == "<=":
            return lv <= rv
        if self.op == "<":
            return lv < rv
        if self.op == ">=":
            return lv >= rv
        return lv > rv

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula

    def __str__(self) -> str:
        return f"not ({self.sub})"


@dataclass(frozen=True)
class And(Formula):
    subs: tuple[Formula, ...]

    def __str__(self) -> str:
        return " and ".join(f"({s})" for s in self.subs)


@dataclass(frozen=True)
class Or(Formula):
    subs: tuple[Formula, ...]

    def __str__(self) -> str:
        return " or ".join(f"({s})" for s in self.subs)


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula

    def __str__(self) -> str:
        return f"({self.lhs}) => ({self.rhs})"


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula

    def __str__(self) -> str:
        return f"({self.lhs}) <=> ({self.rhs})"


@dataclass(frozen=True)
class Exists(Formula):
    names: tuple[str, ...]
    body: Formula

    def __str__(self) -> str:
        return f"exists {' '.join(self.names)}. ({self.body})"


@dataclass(frozen=True)
class Forall(Formula):
    names: tuple[str, ...]
    body: Formula

    def __str__(self) -> str:
        return f"forall {' '.join(self.names)}. ({self.body})"


# ---------------------------------------------------------------------------
# Smart constructors (light simplification: folding and flattening only)
# ---------------------------------------------------------------------------

def cmp(op: str, lhs: Termish, rhs: Termish) -> Formula:
    l, r = as_term(lhs), as_term(rhs)
    if l.is_const() and r.is_const():
        return BoolLit(Cmp(op, l, r).holds(l.const, r.const))
    return Cmp(op, l, r)


def eq(lhs: Termish, rhs: Termish) -> Formula:
    return cmp("=", lhs, rhs)


def le(lhs: Termish, rhs: Termish) -> Formula:
    return cmp("<=", lhs, rhs)


def ge(lhs: Termish, rhs: Termish) -> Formula:
    return cmp(">=", lhs, rhs)


def conj(*subs: Formula) -> Formula:
    flat: list[Formula] = []
    for s in subs:
        if isinstance(s, And):
            flat.extend(s.subs)
        elif s == FALSE:
            return FALSE
        elif s != TRUE:
            flat.append(s)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*subs: Formula) -> Formula:
    flat: list[Formula] = []
    for s in subs:
        if isinstance(s, Or):
            flat.extend(s.subs)
        elif s == TRUE:
            return TRUE
        elif s != FALSE:
            flat.append(s)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(sub: Formula) -> Formula:
    if isinstance(sub, BoolLit):
        return BoolLit(not sub.value)
    if isinstance(sub, Not):
        return sub.sub
    return Not(sub)


def implies(lhs: Formula, rhs: Formula) -> Formula:
    if lhs == TRUE:
        return rhs
    if lhs == FALSE or rhs == TRUE:
        return TRUE
    return Implies(lhs, rhs)


def iff(lhs: Formula, rhs: Formula) -> Formula:
    if lhs == TRUE:
        return rhs
    if rhs == TRUE:
        return lhs
    return Iff(lhs, rhs)


def exists(names: Iterable[str], body: Formula) -> Formula:
    names = tuple(names)
    if not names:
        return body
    if isinstance(body, BoolLit):
        return body
    return Exists(names, body)


def forall(names: Iterable[str], body: Formula) -> Formula:
    names = tuple(names)
    if not names:
        return body
    if isinstance(body, BoolLit):
        return body
    return Forall(names, body)


# ---------------------------------------------------------------------------
# Analysis and transformation
# ---------------------------------------------------------------------------

def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, BoolLit):
        return frozenset()
    if isinstance(f, Cmp):
        return f.lhs.variables() | f.rhs.variables()
    if isinstance(f, Not):
        return free_vars(f.sub)
    if isinstance(f, (And, Or)):
        out: frozenset[str] = frozenset()
        for s in f.subs:
            out |= free_vars(s)
        return out
    if isinstance(f, (Implies, Iff)):
        return free_vars(f.lhs) | free_vars(f.rhs)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - frozenset(f.names)
    raise TypeError(f"unknown formula node {f!r}")


def eval_formula(f: Formula, assignment: Mapping[str, int],
                 quantifier_bound: Optional[int] = None) -> bool:
    """Truth of ``f`` under a total assignment of its free variables.

    Quantified subformulas are decided by enumerating the bound variables
    over 0..quantifier_bound; without a bound they raise
    UnboundedQuantifier.  On quantifier-free formulas the result depends
    only on the assignment restricted to the free variables.
    """
    env = dict(assignment)
    return _eval(f, env, quantifier_bound)


def _eval(f: Formula, env: dict[str, int], bound: Optional[int]) -> bool:
    if isinstance(f, BoolLit):
        return f.value
    if isinstance(f, Cmp):
        return f.holds(f.lhs.value(env), f.rhs.value(env))
    if isinstance(f, Not):
        return not _eval(f.sub, env, bound)
    if isinstance(f, And):
        return all(_eval(s, env, bound) for s in f.subs)
    if isinstance(f, Or):
        return any(_eval(s, env, bound) for s in f.subs)
    if isinstance(f, Implies):
        return (not _eval(f.lhs, env, bound)) or _eval(f.rhs, env, bound)
    if isinstance(f, Iff):
        return _eval(f.lhs, env, bound) == _eval(f.rhs, env, bound)
    if isinstance(f, (Exists, Forall)):
        if bound is None:
            raise UnboundedQuantifier(
                f"cannot enumerate {type(f).__name__.lower()} "
                f"{' '.join(f.names)} without a bound")
        saved = {v: env[v] for v in f.names if v in env}
        want = isinstance(f, Exists)
        result = not want
        for values in product(range(bound + 1), repeat=len(f.names)):
            env.update(zip(f.names, values))
            if _eval(f.body, env, bound) == want:
                result = want
                break
        for v in f.names:
            env.pop(v, None)
        env.update(saved)
        return result
    raise TypeError(f"unknown formula node {f!r}")


class _FreshNames:
    """Deterministic fresh-name source for capture-avoiding renaming."""

    def __init__(self, taken: Iterable[str], stem: str = "_r") -> None:
        self.taken = set(taken)
        self.stem = stem
        self.counter = 0

    def fresh(self, hint: str = "") -> str:
        while True:
            name = f"{self.stem}{self.counter}"
            self.counter += 1
            if name not in self.taken:
                self.taken.add(name)
                return name


def substitute(f: Formula, mapping: Mapping[str, Termish]) -> Formula:
    """Capture-avoiding substitution of free variables by linear terms."""
    terms = {v: as_term(t) for v, t in mapping.items()}
    taken = set(free_vars(f))
    for t in terms.values():
        taken |= t.variables()
    return _subst(f, terms, _FreshNames(taken))


def _subst_term(t: LinTerm, terms: Mapping[str, LinTerm]) -> LinTerm:
    out = const(t.const)
    for v, c in t.coeffs:
        out = out + terms.get(v, var(v)).scale(c)
    return out


def _subst(f: Formula, terms: dict[str, LinTerm], fresh: _FreshNames) -> Formula:
    if isinstance(f, BoolLit):
        return f
    if isinstance(f, Cmp):
        return cmp(f.op, _subst_term(f.lhs, terms), _subst_term(f.rhs, terms))
    if isinstance(f, Not):
        return neg(_subst(f.sub, terms, fresh))
    if isinstance(f, And):
        return conj(*(_subst(s, terms, fresh) for s in f.subs))
    if isinstance(f, Or):
        return disj(*(_subst(s, terms, fresh) for s in f.subs))
    if isinstance(f, Implies):
        return implies(_subst(f.lhs, terms, fresh), _subst(f.rhs, terms, fresh))
    if isinstance(f, Iff):
        return iff(_subst(f.lhs, terms, fresh), _subst(f.rhs, terms, fresh))
    if isinstance(f, (Exists, Forall)):
        inner = {v: t for v, t in terms.items() if v not in f.names}
        clash = [n for n in f.names
                 if any(n in t.variables() for t in inner.values())]
        names = list(f.names)
        if clash:
            ren = {n: fresh.fresh(n) for n in clash}
            names = [ren.get(n, n) for n in names]
            inner.update({n: var(ren[n]) for n in clash})
        body = _subst(f.body, inner, fresh)
        ctor = exists if isinstance(f, Exists) else forall
        return ctor(tuple(names), body)
    raise TypeError(f"unknown formula node {f!r}")


def rename_bound(f: Formula, stem: str = "_q") -> Formula:
    """Rename every bound variable to a fresh, unique name.

    After renaming, no variable is bound twice and no bound name shadows a
    free one, which keeps generated scripts unambiguous.
    """
    fresh = _FreshNames(free_vars(f), stem)
    return _rename_bound(f, {}, fresh)


def _rename_bound(f: Formula, ren: dict[str, str], fresh: _FreshNames) -> Formula:
    if isinstance(f, BoolLit):
        return f
    if isinstance(f, Cmp):
        return Cmp(f.op, f.lhs.rename(ren), f.rhs.rename(ren))
    if isinstance(f, Not):
        return Not(_rename_bound(f.sub, ren, fresh))
    if isinstance(f, And):
        return And(tuple(_rename_bound(s, ren, fresh) for s in f.subs))
    if isinstance(f, Or):
        return Or(tuple(_rename_bound(s, ren, fresh) for s in f.subs))
    if isinstance(f, Implies):
        return Implies(_rename_bound(f.lhs, ren, fresh),
                       _rename_bound(f.rhs, ren, fresh))
    if isinstance(f, Iff):
        return Iff(_rename_bound(f.lhs, ren, fresh),
                   _rename_bound(f.rhs, ren, fresh))
    if isinstance(f, (Exists, Forall)):
        inner = dict(ren)
        new_names = []
        for n in f.names:
            nn = fresh.fresh(n)
            inner[n] = nn
            new_names.append(nn)
        body = _rename_bound(f.body, inner, fresh)
        ctor = Exists if isinstance(f, Exists) else Forall
        return ctor(tuple(new_names), body)
    raise TypeError(f"unknown formula node {f!r}")


def models_within_bound(f: Formula, variables: Iterable[str],
                        bound: int) -> set[tuple[int, ...]]:
    """All satisfying assignments with every component in 0..bound.

    Returns value tuples aligned with ``variables`` (which must cover the
    free variables of ``f``).
    """
    names = list(variables)
    missing = free_vars(f) - set(names)
    if missing:
        raise ValueError(f"free variables not enumerated: {sorted(missing)}")
    out = set()
    for values in product(range(bound + 1), repeat=len(names)):
        if eval_formula(f, dict(zip(names, values)), quantifier_bound=bound):
            out.add(values)
    return out


def marking_formula(m: Mapping[str, int]) -> Formula:
    """Conjunction pinning each variable to its value in ``m``."""
    return conj(*(eq(var(p), const(k)) for p, k in sorted(m.items())))


# ---------------------------------------------------------------------------
# Linking-constraint preparation
# ---------------------------------------------------------------------------

def build_linking_formula(e: Formula, places1: Iterable[str],
                          places2: Iterable[str],
                          prefix1: str = "n1.", prefix2: str = "n2.") -> Formula:
    """Split the linking constraint over two disjoint variable namespaces.

    Free occurrences of first-net places move to the ``prefix1`` namespace
    and second-net places to ``prefix2``.  A place present in both nets is
    read in the first namespace and additionally pinned equal across the
    two namespaces.  Bound variables of ``e`` are renamed first so they
    cannot interfere with place names.
    """
    p1, p2 = list(places1), list(places2)
    stray = free_vars(e) - set(p1) - set(p2)
    if stray:
        raise ValueError(
            f"linking constraint mentions unknown places: {sorted(stray)}")
    renamed = rename_bound(e, stem="_e")
    mapping: dict[str, Termish] = {}
    for p in p1:
        mapping[p] = var(prefix1 + p)
    for p in p2:
        if p not in mapping:
            mapping[p] = var(prefix2 + p)
    split = substitute(renamed, mapping)
    shared = sorted(set(p1) & set(p2))
    links = [eq(var(prefix1 + p), var(prefix2 + p)) for p in shared]
    return conj(split, *links)
