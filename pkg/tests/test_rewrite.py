"""Soup normalization: core steps, determinism, boundary pinning, scalars."""

import random

import pytest

from daggerlc.gen import random_judgement
from daggerlc.rewrite import (
    expand_scalar_product, normalize, normalize_random, soup_equiv, step,
    step_ceiling,
)
from daggerlc.sequent import (
    ContextEntry, alpha_equiv, closed, connect, judgement, rule_id,
    validate_linearity,
)
from daggerlc.terms import (
    Dimension, GREEN, ONE, UNIT,
    Spider, Star, TAtom, TDual, TTensor, Tensor, Var, tensor, tensor_type,
)

A = TAtom("A")
B = TAtom("B")


def v(name):
    return Var(name)


class TestCoreSteps:
    def test_bifunctoriality_splits_tensor_pairs(self):
        j = judgement(
            [ContextEntry(v("x"), A), ContextEntry(v("y"), B)],
            [connect(Tensor(v("x"), v("y")), Tensor(v("p"), v("q")),
                     TTensor(A, B))],
            ContextEntry(Tensor(v("p"), v("q")), TTensor(A, B)))
        nf, trace = normalize(j)
        assert len(nf.soup) == 2
        assert trace.steps[0][0].kind == "bifunctoriality"

    def test_consumption_substitutes_internal_var(self):
        # conclusion variables are not pinned: the state flows all the way
        # into the conclusion and the soup empties
        j = closed(v("b"), A, [(Spider(GREEN, 0, 1), v("a"), A),
                               (v("a"), v("b"), A)])
        nf, _ = normalize(j)
        assert nf.soup == ()
        assert nf.conclusion.term == Spider(GREEN, 0, 1)

    def test_cancellation_removes_double_star_pair(self):
        # {x* : y*} with both boundary-pinned stays; an internal pair of
        # opposite wires cancels through consumption instead
        j = judgement(
            [ContextEntry(v("x"), A)],
            [connect(v("x"), v("m"), A), connect(v("m"), v("z"), A)],
            ContextEntry(v("z"), A))
        nf, _ = normalize(j)
        assert alpha_equiv(nf, judgement([ContextEntry(v("x"), A)],
                                         [connect(v("x"), v("z"), A)],
                                         ContextEntry(v("z"), A)))

    def test_context_vars_never_substituted(self):
        j = judgement([ContextEntry(v("x"), A)],
                      [connect(v("x"), v("z"), A)],
                      ContextEntry(v("z"), A))
        nf, trace = normalize(j)
        assert trace.steps == []
        assert nf == j

    def test_scalar_split(self):
        j = closed(v("k"), A,
                   [(Spider(GREEN, 0, 1), v("k"), A),
                    (Dimension(TTensor(A, B)), ONE, UNIT)])
        nf, _ = normalize(j)
        factors = {str(c) for c in nf.soup}
        assert "1 : D{A}" in factors and "1 : D{B}" in factors

    def test_expand_scalar_product(self):
        c = connect(Dimension(TTensor(A, A)), ONE, UNIT)
        parts = expand_scalar_product(c)
        assert len(parts) == 2


class TestNormalization:
    def test_idempotent(self):
        rng = random.Random(0)
        for _ in range(25):
            j = random_judgement(rng)
            nf, _ = normalize(j)
            nf2, trace = normalize(nf)
            assert trace.steps == []
            assert nf2 == nf

    def test_preserves_linearity_and_types(self):
        rng = random.Random(1)
        for _ in range(50):
            j = random_judgement(rng)
            nf, _ = normalize(j)  # check=True raises on violation
            assert validate_linearity(nf) == []
            assert nf.conclusion.type == j.conclusion.type

    def test_step_ceiling_zero_on_normal_form(self):
        assert step_ceiling(rule_id("x", A)) == 0
        j = closed(v("b"), A, [(Spider(GREEN, 0, 1), v("a"), A),
                               (v("a"), v("b"), A)])
        assert step_ceiling(j) >= 1

    def test_random_strategy_confluent_on_samples(self):
        rng = random.Random(2)
        for _ in range(10):
            j = random_judgement(rng)
            nf1, _ = normalize_random(j, random.Random(3))
            nf2, _ = normalize_random(j, random.Random(4))
            assert alpha_equiv(nf1, nf2)

    def test_soup_equiv_modulo_reduction(self):
        j1 = closed(v("b"), A, [(Spider(GREEN, 0, 1), v("a"), A),
                                (v("a"), v("b"), A)])
        j2 = closed(v("b"), A, [(Spider(GREEN, 0, 1), v("b"), A)])
        assert soup_equiv(j1, j2)
        from daggerlc.terms import Phase

        j3 = closed(v("b"), A,
                    [(Spider(GREEN, 0, 1, Phase.of(1)), v("b"), A)])
        assert not soup_equiv(j1, j3)
