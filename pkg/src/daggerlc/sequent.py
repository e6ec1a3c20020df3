"""Typing judgements and the Gentzen-style rules that build them.

A judgement is an ordered typed context, a relational soup (a multiset of
equityped term pairs), a typed conclusion, and a table of declared constants.
Every variable must occur exactly twice across the whole judgement; the rule
constructors preserve this and alpha-rename premises apart automatically when
two judgements are merged.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .terms import (
    Declared, ScalarOne, Star, TAtom, TDual, Tensor, Term, TypeExpr, TTensor,
    TUnit, UNIT, ONE, Var, is_constant_free, negate_term, negate_type,
    rename_vars, var_occurrences,
)


@dataclass(frozen=True)
class ContextEntry:
    term: Term
    type: TypeExpr

    def __str__(self) -> str:
        return f"{self.term} : {self.type}"


@dataclass(frozen=True)
class SoupConnection:
    """A connection {left : right} at a common type.

    Use `connect` to build one: of the two congruent orientations
    {a : b} and {b* : a*} it stores whichever renders lexicographically
    smaller, so structural equality respects the congruence.
    """

    left: Term
    right: Term
    type: TypeExpr

    def flipped(self) -> "SoupConnection":
        return SoupConnection(negate_term(self.right), negate_term(self.left),
                              negate_type(self.type))

    def __str__(self) -> str:
        return f"{self.left} : {self.right}"


def connect(left: Term, right: Term, type: TypeExpr) -> SoupConnection:
    raw = SoupConnection(left, right, type)
    flip = raw.flipped()
    return raw if str(raw) <= str(flip) else flip


def _sorted_soup(soup: Iterable[SoupConnection]) -> tuple:
    return tuple(sorted(soup, key=str))


@dataclass(frozen=True)
class Judgement:
    context: tuple  # of ContextEntry
    soup: tuple  # of SoupConnection, kept sorted by rendering
    conclusion: ContextEntry
    declarations: tuple = ()  # of (name, TypeExpr) pairs, sorted by name

    def declaration_map(self) -> dict:
        return dict(self.declarations)

    def __str__(self) -> str:
        ctx = ", ".join(str(e) for e in self.context)
        soup = ""
        if self.soup:
            soup = "{ " + ", ".join(str(c) for c in self.soup) + " } "
        lhs = f"{ctx} " if ctx else ""
        return f"{lhs}|- {soup}{self.conclusion}"


def judgement(context: Iterable[ContextEntry],
              soup: Iterable[SoupConnection],
              conclusion: ContextEntry,
              declarations: Iterable = ()) -> Judgement:
    return Judgement(tuple(context), _sorted_soup(soup), conclusion,
                     tuple(sorted(declarations)))


def _merge_decls(j1: Judgement, j2: Judgement) -> tuple:
    merged = dict(j1.declarations)
    for name, ty in j2.declarations:
        if name in merged and merged[name] != ty:
            raise ValueError(f"conflicting declarations for #{name}")
        merged[name] = ty
    return tuple(sorted(merged.items()))


# ---------------------------------------------------------------------------
# Variable accounting
# ---------------------------------------------------------------------------


def judgement_var_occurrences(j: Judgement) -> Counter:
    acc: Counter = Counter()
    for entry in j.context:
        acc.update(var_occurrences(entry.term))
    for conn in j.soup:
        acc.update(var_occurrences(conn.left))
        acc.update(var_occurrences(conn.right))
    acc.update(var_occurrences(j.conclusion.term))
    return acc


def validate_linearity(j: Judgement) -> list:
    """Return the list of offending (name, count) pairs; empty means ok."""
    return [(name, count)
            for name, count in sorted(judgement_var_occurrences(j).items())
            if count != 2]


def fresh_name(base: str, used: set) -> str:
    if base not in used:
        return base
    stem = base.rstrip("0123456789").rstrip("_") or base
    k = 1
    while f"{stem}_{k}" in used:
        k += 1
    return f"{stem}_{k}"


def rename_judgement(j: Judgement, mapping: Mapping[str, str]) -> Judgement:
    mapping = dict(mapping)
    return judgement(
        [ContextEntry(rename_vars(e.term, mapping), e.type) for e in j.context],
        [connect(rename_vars(c.left, mapping), rename_vars(c.right, mapping),
                 c.type) for c in j.soup],
        ContextEntry(rename_vars(j.conclusion.term, mapping),
                     j.conclusion.type),
        j.declarations)


def rename_apart(j: Judgement, taken: set) -> Judgement:
    """Alpha-rename j so its variables avoid every name in `taken`."""
    mapping = {}
    own = set(judgement_var_occurrences(j))
    used = set(taken) | own
    for name in sorted(own):
        if name in taken:
            new = fresh_name(name, used | set(mapping.values()))
            mapping[name] = new
            used.add(new)
    return rename_judgement(j, mapping) if mapping else j


# ---------------------------------------------------------------------------
# Sequent rules
# ---------------------------------------------------------------------------


def rule_id(name: str, t: TypeExpr) -> Judgement:
    x = Var(name)
    return judgement([ContextEntry(x, t)], [], ContextEntry(x, t))


def negate_soup(soup: Iterable[SoupConnection]) -> list:
    return [connect(negate_term(c.left), negate_term(c.right),
                    negate_type(c.type)) for c in soup]


def rule_negation(j: Judgement) -> Judgement:
    """Star the (single or absent) context entry, the conclusion, and the
    whole soup.  The empty-context case is the derivable specialization used
    by the dagger flip."""
    if len(j.context) > 1:
        raise ValueError("Negation needs at most one context entry")
    ctx = [ContextEntry(negate_term(e.term), negate_type(e.type))
           for e in j.context]
    return judgement(ctx, negate_soup(j.soup),
                     ContextEntry(negate_term(j.conclusion.term),
                                  negate_type(j.conclusion.type)),
                     j.declarations)


def rule_tensor_right(j1: Judgement, j2: Judgement) -> Judgement:
    j2 = rename_apart(j2, set(judgement_var_occurrences(j1)))
    ctx = list(j1.context)
    if j2.context:
        packed_term = j2.context[0].term
        packed_type = j2.context[0].type
        for e in j2.context[1:]:
            packed_term = Tensor(packed_term, e.term)
            packed_type = TTensor(packed_type, e.type)
        ctx.append(ContextEntry(packed_term, packed_type))
    return judgement(
        ctx, list(j1.soup) + list(j2.soup),
        ContextEntry(Tensor(j1.conclusion.term, j2.conclusion.term),
                     TTensor(j1.conclusion.type, j2.conclusion.type)),
        _merge_decls(j1, j2))


def rule_cut(j1: Judgement, j2: Judgement) -> Judgement:
    """Cut j1's conclusion against the first context entry of j2."""
    if not j2.context:
        raise ValueError("Cut needs a context entry in the right premise")
    j2 = rename_apart(j2, set(judgement_var_occurrences(j1)))
    cut_entry = j2.context[0]
    if cut_entry.type != j1.conclusion.type:
        raise TypeError(
            f"cut formula type mismatch: {j1.conclusion.type} vs "
            f"{cut_entry.type}")
    soup = list(j1.soup) + list(j2.soup)
    soup.append(connect(j1.conclusion.term, cut_entry.term,
                        j1.conclusion.type))
    return judgement(list(j1.context) + list(j2.context[1:]), soup,
                     j2.conclusion, _merge_decls(j1, j2))


def rule_curry(j: Judgement) -> Judgement:
    if not j.context:
        raise ValueError("Curry needs a context entry")
    head = j.context[0]
    return judgement(
        j.context[1:], j.soup,
        ContextEntry(Tensor(negate_term(head.term), j.conclusion.term),
                     TTensor(negate_type(head.type), j.conclusion.type)),
        j.declarations)


def rule_uncurry(j: Judgement) -> Judgement:
    concl = j.conclusion
    if not isinstance(concl.term, Tensor) or not isinstance(concl.type, TTensor):
        raise ValueError("Uncurry needs a tensor conclusion")
    head = ContextEntry(negate_term(concl.term.left),
                        negate_type(concl.type.left))
    return judgement([head] + list(j.context), j.soup,
                     ContextEntry(concl.term.right, concl.type.right),
                     j.declarations)


def rule_exchange(j: Judgement, i: int) -> Judgement:
    if not (0 <= i < len(j.context) - 1):
        raise IndexError(f"exchange position {i} out of range")
    ctx = list(j.context)
    ctx[i], ctx[i + 1] = ctx[i + 1], ctx[i]
    return judgement(ctx, j.soup, j.conclusion, j.declarations)


def rule_unit(j: Judgement, side: str = "left",
              direction: str = "intro") -> Judgement:
    """Move a unit scalar between the soup connection {i* : 1} and an I-typed
    variable entry at the chosen end of the context."""
    if side not in ("left", "right") or direction not in ("intro", "elim"):
        raise ValueError("side must be left/right, direction intro/elim")
    if direction == "intro":
        used = set(judgement_var_occurrences(j))
        for k, conn in enumerate(j.soup):
            for cand in (conn, conn.flipped()):
                if (isinstance(cand.left, Star)
                        and isinstance(cand.left.inner, Var)
                        and cand.right == ONE
                        and cand.type == UNIT):
                    name = cand.left.inner.name
                    entry = ContextEntry(Var(name), UNIT)
                    soup = list(j.soup)
                    del soup[k]
                    ctx = ([entry] + list(j.context) if side == "left"
                           else list(j.context) + [entry])
                    return judgement(ctx, soup, j.conclusion, j.declarations)
        raise ValueError("no {i* : 1} connection in the soup")
    # elim
    if not j.context:
        raise ValueError("no context entry to eliminate")
    pos = 0 if side == "left" else len(j.context) - 1
    entry = j.context[pos]
    if entry.type != UNIT or not isinstance(entry.term, Var):
        raise ValueError("context end is not a unit-typed variable")
    ctx = list(j.context)
    del ctx[pos]
    soup = list(j.soup) + [connect(Star(entry.term), ONE, UNIT)]
    return judgement(ctx, soup, j.conclusion, j.declarations)


def rule_tensor_left(j: Judgement, i: int, direction: str = "pack") -> Judgement:
    ctx = list(j.context)
    if direction == "pack":
        if not (0 <= i < len(ctx) - 1):
            raise IndexError("pack needs entries i and i+1")
        a, b = ctx[i], ctx[i + 1]
        ctx[i:i + 2] = [ContextEntry(Tensor(a.term, b.term),
                                     TTensor(a.type, b.type))]
    elif direction == "unpack":
        if not (0 <= i < len(ctx)):
            raise IndexError("unpack position out of range")
        e = ctx[i]
        if not isinstance(e.term, Tensor) or not isinstance(e.type, TTensor):
            raise ValueError("entry is not a tensor")
        ctx[i:i + 1] = [ContextEntry(e.term.left, e.type.left),
                        ContextEntry(e.term.right, e.type.right)]
    else:
        raise ValueError("direction must be pack or unpack")
    return judgement(ctx, j.soup, j.conclusion, j.declarations)


def dagger_flip(j: Judgement) -> Judgement:
    """b:B |-_{S*} a:A from a:A |-_S b:B, via Curry; Negation; Uncurry.

    A state |-_S b:B flips to the effect b:B |-_{S*} 1:I (the empty
    right-hand-side shorthand)."""
    if len(j.context) > 1:
        raise ValueError("dagger flip needs at most one context entry")
    if not j.context:
        return judgement([ContextEntry(j.conclusion.term, j.conclusion.type)],
                         negate_soup(j.soup), ContextEntry(ONE, UNIT),
                         j.declarations)
    return rule_uncurry(rule_negation(rule_curry(j)))


def apply_term(jf: Judgement, jt: Judgement) -> Judgement:
    """Application: from f : A* (x) B and t : A build the sequent concluding
    a fresh variable x : B with the connection {f : t* (x) x}."""
    ftype = jf.conclusion.type
    if not isinstance(ftype, TTensor):
        raise TypeError("function conclusion must have a tensor type")
    dom = negate_type(ftype.left)
    if jt.conclusion.type != dom:
        raise TypeError(f"argument type {jt.conclusion.type} != domain {dom}")
    jt = rename_apart(jt, set(judgement_var_occurrences(jf)))
    used = (set(judgement_var_occurrences(jf))
            | set(judgement_var_occurrences(jt)))
    x = Var(fresh_name("x", used))
    soup = list(jf.soup) + list(jt.soup)
    soup.append(connect(jf.conclusion.term,
                        Tensor(negate_term(jt.conclusion.term), x), ftype))
    return judgement(list(jf.context) + list(jt.context), soup,
                     ContextEntry(x, ftype.right), _merge_decls(jf, jt))


# ---------------------------------------------------------------------------
# Alpha-equivalence
# ---------------------------------------------------------------------------


class _Mismatch(Exception):
    pass


class _Matcher:
    """Bidirectional variable matching: a variable may correspond to a
    variable or be bundled into a constant-free compound on the other side."""

    def __init__(self):
        self.fwd = {}  # j1 var name -> j2 term
        self.bwd = {}  # j2 var name -> j1 term or "bundled" marker

    def snapshot(self):
        return dict(self.fwd), dict(self.bwd)

    def restore(self, snap):
        self.fwd, self.bwd = dict(snap[0]), dict(snap[1])

    def bind_fwd(self, name: str, t2: Term) -> None:
        if name in self.fwd:
            if self.fwd[name] != t2:
                raise _Mismatch
            return
        if not is_constant_free(t2):
            raise _Mismatch
        self.fwd[name] = t2
        for other in var_occurrences(t2):
            prior = self.bwd.get(other)
            if prior is None:
                self.bwd[other] = ("bundled", name)
            elif prior != ("bundled", name):
                raise _Mismatch

    def bind_bwd(self, name: str, t1: Term) -> None:
        if name in self.bwd:
            if self.bwd[name] != t1:
                raise _Mismatch
            return
        if not is_constant_free(t1):
            raise _Mismatch
        self.bwd[name] = t1

    def match(self, t1: Term, t2: Term) -> None:
        if isinstance(t1, Star) and isinstance(t1.inner, Var):
            self.match(t1.inner, negate_term(t2))
            return
        if isinstance(t1, Var):
            self.bind_fwd(t1.name, t2)
            return
        if isinstance(t2, Star) and isinstance(t2.inner, Var):
            self.bind_bwd(t2.inner.name, negate_term(t1))
            return
        if isinstance(t2, Var):
            self.bind_bwd(t2.name, t1)
            return
        if isinstance(t1, Tensor) and isinstance(t2, Tensor):
            self.match(t1.left, t2.left)
            self.match(t1.right, t2.right)
            return
        if t1 != t2:  # constants and starred constants: structural
            raise _Mismatch


def alpha_equiv(j1: Judgement, j2: Judgement) -> bool:
    """Alpha-equivalence: a consistent renaming/bundling of variables maps
    one judgement onto the other."""
    if len(j1.context) != len(j2.context):
        return False
    if len(j1.soup) != len(j2.soup):
        return False
    if [e.type for e in j1.context] != [e.type for e in j2.context]:
        return False
    if j1.conclusion.type != j2.conclusion.type:
        return False
    m = _Matcher()
    try:
        for e1, e2 in zip(j1.context, j2.context):
            m.match(e1.term, e2.term)
        m.match(j1.conclusion.term, j2.conclusion.term)
    except _Mismatch:
        return False
    return _match_soup(m, list(j1.soup), list(j2.soup))


def _atomic_var_conn(c: SoupConnection) -> bool:
    """Both sides are (possibly starred) variables at an atomic type.  Such a
    connection denotes the same contraction in every orientation, so matching
    may ignore which side is which."""
    if not isinstance(c.type, (TAtom, TDual)):
        return False
    for t in (c.left, c.right):
        if isinstance(t, Star):
            t = t.inner
        if not isinstance(t, Var):
            return False
    return True


def _match_soup(m: _Matcher, soup1: list, soup2: list) -> bool:
    if not soup1:
        return True
    c1, rest1 = soup1[0], soup1[1:]
    for i, c2 in enumerate(soup2):
        cands = [c2, c2.flipped()]
        if _atomic_var_conn(c1) and _atomic_var_conn(c2):
            swapped = SoupConnection(c2.right, c2.left, c2.type)
            cands += [swapped, swapped.flipped()]
        for cand in cands:
            if cand.type != c1.type:
                continue
            snap = m.snapshot()
            try:
                m.match(c1.left, cand.left)
                m.match(c1.right, cand.right)
            except _Mismatch:
                m.restore(snap)
                continue
            if _match_soup(m, rest1, soup2[:i] + soup2[i + 1:]):
                return True
            m.restore(snap)
    return False


# ---------------------------------------------------------------------------
# Syntactic-category helpers
# ---------------------------------------------------------------------------


def closed(term: Term, type: TypeExpr, soup: Iterable = (),
           declarations: Iterable = ()) -> Judgement:
    """A closed sequent |- term : type (soup given as (left, right, type)
    triples)."""
    return judgement([], [connect(*c) for c in soup],
                     ContextEntry(term, type), declarations)


def arrow(term: Term, type: TypeExpr, soup: Iterable = (),
          declarations: Iterable = ()) -> Judgement:
    """Uncurry a closed sequent for a map A -o B into a : A |- b : B form."""
    return rule_uncurry(closed(term, type, soup, declarations))


def compose(g: Judgement, f: Judgement) -> Judgement:
    """g after f, by cutting f's conclusion against g's (packed) context."""
    g_packed = g
    while len(g_packed.context) > 1:
        g_packed = rule_tensor_left(g_packed, 0, "pack")
    return rule_cut(f, g_packed)
