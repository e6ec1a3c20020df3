"""Soup reduction: the four core rules, normalization, and soup equivalence.

The core rules are bifunctoriality, trace, cancellation, and consumption,
plus a scalar-splitting step that expands products of scalars into their
component connections (the defining equation of scalar multiplication).
Classical-structure equalities are deliberately NOT applied here — they live
in `classical` and only fire under explicit scripts or bounded search.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .terms import (
    Dimension, ONE, ScalarOne, Star, TDual, Tensor, Term, TTensor, TUnit,
    UNIT, Var, is_constant_free, negate_term, substitute, var_occurrences,
)
from .sequent import (
    ContextEntry, Judgement, SoupConnection, alpha_equiv, connect, judgement,
    validate_linearity,
)

BIFUNCTORIALITY = "bifunctoriality"
TRACE = "trace"
CANCELLATION = "cancellation"
CONSUMPTION = "consumption"
SCALAR_SPLIT = "scalar-split"

_KIND_ORDER = (BIFUNCTORIALITY, TRACE, CANCELLATION, CONSUMPTION, SCALAR_SPLIT)


@dataclass(frozen=True)
class SoupStep:
    kind: str
    index: int  # position in the (sorted) soup
    substitute_right: bool = False  # consumption: which side gets replaced


@dataclass
class Trace:
    initial: Judgement
    steps: list  # of (SoupStep, Judgement)

    @property
    def final(self) -> Judgement:
        return self.steps[-1][1] if self.steps else self.initial


def _undual(t):
    """The underlying dual-free type; a dual space has the same dimension."""
    if isinstance(t, TDual):
        return t.inner
    if isinstance(t, TTensor):
        return TTensor(_undual(t.left), _undual(t.right))
    return t


def _is_scalar_term(t: Term) -> bool:
    """A term built solely from 1, dimension constants, and tensor."""
    if isinstance(t, (ScalarOne, Dimension)):
        return True
    if isinstance(t, Tensor):
        return _is_scalar_term(t.left) and _is_scalar_term(t.right)
    return False


def _scalar_factors(t: Term) -> list:
    """Flatten a scalar product, dropping 1 and splitting tensor dimensions."""
    if isinstance(t, ScalarOne):
        return []
    if isinstance(t, Dimension):
        ty = _undual(t.of_type)
        if isinstance(ty, TUnit):
            return []
        if isinstance(ty, TTensor) and not t.sqrt:
            return (_scalar_factors(Dimension(ty.left))
                    + _scalar_factors(Dimension(ty.right)))
        return [Dimension(ty, t.sqrt)]
    if isinstance(t, Tensor):
        return _scalar_factors(t.left) + _scalar_factors(t.right)
    raise ValueError(f"not a scalar term: {t}")


def _consumable_side(conn: SoupConnection, right: bool, pinned: set):
    """If the chosen side is a plain or starred variable whose mate does not
    occur on the other side, return (name, replacement-for-that-variable).

    Context variables are the sequent's input boundary: a substitution may
    neither rewrite the context nor spread a context variable to new
    positions, so connections that reach the context are part of the normal
    form (e.g. the identity soup {x1 : x3}).
    """
    side = conn.right if right else conn.left
    other = conn.left if right else conn.right
    if isinstance(side, Var):
        name, repl = side.name, other
    elif isinstance(side, Star) and isinstance(side.inner, Var):
        name, repl = side.inner.name, negate_term(other)
    else:
        return None
    if name in var_occurrences(other):
        return None
    if name in pinned or any(v in pinned for v in var_occurrences(repl)):
        return None
    return name, repl


def _boundary_vars(j: Judgement) -> set:
    pinned = set()
    for e in j.context:
        pinned |= set(var_occurrences(e.term))
    return pinned


def _step_candidates(j: Judgement) -> list:
    out = []
    pinned = _boundary_vars(j)
    for i, conn in enumerate(j.soup):
        if (isinstance(conn.left, Tensor) and isinstance(conn.right, Tensor)
                and isinstance(conn.type, TTensor)):
            out.append(SoupStep(BIFUNCTORIALITY, i))
        if (isinstance(conn.left, Var) and conn.left == conn.right):
            out.append(SoupStep(TRACE, i))
        if conn.left == ONE and conn.right == ONE:
            out.append(SoupStep(CANCELLATION, i))
        for right in (False, True):
            if _consumable_side(conn, right, pinned):
                out.append(SoupStep(CONSUMPTION, i, right))
        if _is_scalar_term(conn.left) and _is_scalar_term(conn.right):
            split = ([connect(f, ONE, UNIT) for f in _scalar_factors(conn.left)]
                     + [connect(negate_term(f), ONE, UNIT)
                        for f in _scalar_factors(conn.right)])
            if sorted(split, key=str) != [conn]:
                out.append(SoupStep(SCALAR_SPLIT, i))
    return out


def step(j: Judgement, s: SoupStep) -> Judgement:
    conn = j.soup[s.index]
    rest = list(j.soup[:s.index] + j.soup[s.index + 1:])
    if s.kind == BIFUNCTORIALITY:
        rest.append(connect(conn.left.left, conn.right.left, conn.type.left))
        rest.append(connect(conn.left.right, conn.right.right, conn.type.right))
        return judgement(j.context, rest, j.conclusion, j.declarations)
    if s.kind == TRACE:
        rest.append(connect(Dimension(_undual(conn.type)), ONE, UNIT))
        return judgement(j.context, rest, j.conclusion, j.declarations)
    if s.kind == CANCELLATION:
        return judgement(j.context, rest, j.conclusion, j.declarations)
    if s.kind == SCALAR_SPLIT:
        rest += [connect(f, ONE, UNIT) for f in _scalar_factors(conn.left)]
        rest += [connect(negate_term(f), ONE, UNIT)
                 for f in _scalar_factors(conn.right)]
        return judgement(j.context, rest, j.conclusion, j.declarations)
    if s.kind == CONSUMPTION:
        found = _consumable_side(conn, s.substitute_right, _boundary_vars(j))
        if found is None:
            raise ValueError("connection does not match consumption")
        name, repl = found
        sub = lambda t: substitute(t, name, repl)
        return judgement(
            [ContextEntry(sub(e.term), e.type) for e in j.context],
            [connect(sub(c.left), sub(c.right), c.type) for c in rest],
            ContextEntry(sub(j.conclusion.term), j.conclusion.type),
            j.declarations)
    raise ValueError(f"unknown step kind {s.kind!r}")


def _pick_deterministic(j: Judgement, cands: list) -> SoupStep:
    cands = sorted(cands, key=lambda s: (_KIND_ORDER.index(s.kind), s.index,
                                         s.substitute_right))
    first = cands[0]
    if first.kind == CONSUMPTION:
        twins = [s for s in cands
                 if s.kind == CONSUMPTION and s.index == first.index]
        if len(twins) == 2:
            conn = j.soup[first.index]
            # replace the lexicographically larger side by the smaller
            return twins[1] if str(conn.right) > str(conn.left) else twins[0]
    return first


def step_ceiling(j: Judgement) -> int:
    nodes = 0
    for conn in j.soup:
        for t in (conn.left, conn.right):
            nodes += _node_count(t)
    return nodes + 2 * len(j.soup)


def _node_count(t: Term) -> int:
    if isinstance(t, Tensor):
        return 1 + _node_count(t.left) + _node_count(t.right)
    if isinstance(t, Star):
        return 1 + _node_count(t.inner)
    return 1


def normalize(j: Judgement, choose=None, check: bool = True):
    """Reduce the soup to normal form.

    `choose` picks among candidate steps (default: deterministic
    leftmost-innermost with the canonical kind order).  With check=True each
    step is verified to preserve linearity and the type assignments.
    Returns (normal form, Trace).
    """
    if choose is None:
        choose = _pick_deterministic
    trace = Trace(j, [])
    # hard runaway guard; the advertised ceiling (step_ceiling) is asserted
    # by the property suites, not enforced here
    ceiling = 2 * step_ceiling(j) + 16
    current = j
    ctx_types = [e.type for e in j.context]
    for _ in range(ceiling):
        cands = _step_candidates(current)
        if not cands:
            return current, trace
        s = choose(current, cands)
        nxt = step(current, s)
        if check:
            if [e.type for e in nxt.context] != ctx_types:
                raise AssertionError("subject reduction violated: context")
            if nxt.conclusion.type != j.conclusion.type:
                raise AssertionError("subject reduction violated: conclusion")
            bad = validate_linearity(nxt)
            if bad:
                raise AssertionError(f"linearity violated after step: {bad}")
        trace.steps.append((s, nxt))
        current = nxt
    raise RuntimeError(f"normalization exceeded step ceiling {ceiling}")


def normalize_random(j: Judgement, rng: random.Random):
    """A maximal strategy choosing uniformly among applicable steps."""
    return normalize(j, choose=lambda cur, cands: rng.choice(cands))


def soup_equiv(j1: Judgement, j2: Judgement) -> bool:
    n1, _ = normalize(j1)
    n2, _ = normalize(j2)
    return alpha_equiv(n1, n2)


def expand_scalar_product(c: SoupConnection) -> list:
    """Split a connection between scalar products into component connections
    {factor : 1} per the definition of scalar multiplication."""
    if not (_is_scalar_term(c.left) and _is_scalar_term(c.right)):
        raise ValueError("both sides must be scalar products")
    return ([connect(f, ONE, UNIT) for f in _scalar_factors(c.left)]
            + [connect(negate_term(f), ONE, UNIT)
               for f in _scalar_factors(c.right)])
