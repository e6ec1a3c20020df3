"""Random derivation generator for the property suites.

Judgements are generated by running randomized rule applications, so every
sample is derivable by construction (and therefore linear and well-typed).
"""

from __future__ import annotations

import random

from .terms import (
    GREEN, RED, Phase, Spider, TAtom, TTensor, TUnit, Var, arrow_type,
    combinator, combinator_type, combinator_with_soup, negate_type,
)
from .sequent import (
    ContextEntry, Judgement, apply_term, arrow, closed, connect, dagger_flip,
    judgement, rule_curry, rule_cut, rule_exchange, rule_id, rule_negation,
    rule_tensor_left, rule_tensor_right, rule_uncurry,
)

_ATOMS = [TAtom("A"), TAtom("B")]

_PHASES = [Phase.of(0), Phase.of(1), Phase.of(1, 2), Phase.of(1, 4),
           Phase.of(-1, 4), Phase.of(3, 4)]


def _random_type(rng: random.Random, depth: int = 2):
    if depth > 0 and rng.random() < 0.35:
        return TTensor(_random_type(rng, depth - 1),
                       _random_type(rng, depth - 1))
    return rng.choice(_ATOMS)


def _spider_state(rng: random.Random, counter: list) -> Judgement:
    ty = rng.choice(_ATOMS)
    counter[0] += 1
    k = Var(f"k{counter[0]}")
    sp = Spider(rng.choice((GREEN, RED)), 0, 1, rng.choice(_PHASES))
    return judgement([], [connect(sp, k, ty)], ContextEntry(k, ty))


def _closed_for_domain(rng: random.Random, dom, prefix: str) -> Judgement:
    """A closed combinator sequent whose function domain is `dom`."""
    options = [("id", [dom]), ("lambda_inv", [dom]), ("rho_inv", [dom])]
    if isinstance(dom, TTensor):
        l, r = dom.left, dom.right
        options.append(("sigma", [l, r]))
        if isinstance(r, TTensor):
            options.append(("alpha", [l, r.left, r.right]))
        if isinstance(l, TTensor):
            options.append(("alpha_inv", [l.left, l.right, r]))
        if l == TUnit():
            options.append(("lambda", [r]))
        if r == TUnit():
            options.append(("rho", [l]))
        if r == negate_type(l):
            options.append(("epsilon", [l]))
    if dom == TUnit():
        options.append(("eta", [rng.choice(_ATOMS)]))
    name, types = rng.choice(options)
    term, ty, soup = combinator_with_soup(name, types, prefix)
    return closed(term, ty, soup)


def random_judgement(rng: random.Random, steps: int = 6) -> Judgement:
    counter = [0]
    pool = [rule_id(f"v{i}", _random_type(rng)) for i in range(2)]
    pool.append(_spider_state(rng, counter))
    for n in range(steps):
        op = rng.randrange(9)
        j = pool[-1] if rng.random() < 0.6 else rng.choice(pool)
        try:
            if op == 0:
                pool.append(rule_tensor_right(j, rng.choice(pool)))
            elif op == 1 and j.context:
                pool.append(rule_curry(j))
            elif op == 2:
                pool.append(rule_uncurry(j))
            elif op == 3 and len(j.context) > 1:
                pool.append(rule_exchange(j, rng.randrange(len(j.context) - 1)))
            elif op == 4 and len(j.context) <= 1:
                pool.append(rule_negation(j))
            elif op == 5:
                fj = _closed_for_domain(rng, j.conclusion.type, f"c{n}_")
                pool.append(apply_term(fj, j))
            elif op == 6 and len(j.context) > 1:
                pool.append(rule_tensor_left(j, rng.randrange(len(j.context) - 1),
                                             "pack"))
            elif op == 7:
                pool.append(rule_cut(j, _matching_arrow(rng, j, f"d{n}_")))
            elif op == 8 and len(j.context) <= 1:
                pool.append(dagger_flip(j))
        except (ValueError, TypeError, IndexError):
            continue
    return max(pool, key=lambda jj: len(jj.soup))


def _matching_arrow(rng: random.Random, j: Judgement, prefix: str) -> Judgement:
    ty = j.conclusion.type
    if rng.random() < 0.5:
        return arrow(combinator("id", [ty], prefix), arrow_type(ty, ty))
    if isinstance(ty, TTensor):
        types = [ty.left, ty.right]
        return arrow(combinator("sigma", types, prefix),
                     combinator_type("sigma", types))
    return arrow(combinator("id", [ty], prefix), arrow_type(ty, ty))
