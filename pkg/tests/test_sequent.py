"""Judgements, the structural rules, and alpha-equivalence."""

import pytest

from daggerlc.sequent import (
    ContextEntry, alpha_equiv, apply_term, arrow, closed, compose, connect,
    dagger_flip, fresh_name, judgement, rule_curry, rule_cut, rule_exchange,
    rule_id, rule_negation, rule_tensor_left, rule_tensor_right,
    rule_uncurry, rule_unit, validate_linearity,
)
from daggerlc.terms import (
    GREEN, ONE, UNIT,
    Phase, Spider, Star, TAtom, TDual, TTensor, Tensor, Var, arrow_type,
    combinator, negate_term, negate_type, tensor, tensor_type,
)

A = TAtom("A")
B = TAtom("B")


def v(name):
    return Var(name)


class TestConnections:
    def test_orientation_canonical(self):
        c1 = connect(v("a"), v("b"), A)
        c2 = connect(Star(v("b")), Star(v("a")), TDual(A))
        assert c1 == c2

    def test_flip_is_involutive(self):
        c = connect(Spider(GREEN, 1, 2),
                    tensor(Star(v("a")), v("b"), v("c")),
                    tensor_type(TDual(A), A, A))
        assert c.flipped().flipped() == c


class TestStructuralRules:
    def test_id(self):
        j = rule_id("x", A)
        assert str(j) == "x : A |- x : A"

    def test_cut_merges_soups(self):
        f = rule_id("x", A)
        g = rule_id("y", A)
        j = rule_cut(f, g)
        assert len(j.context) == 1
        assert len(j.soup) == 1

    def test_curry_uncurry_roundtrip(self):
        j = rule_id("x", A)
        back = rule_uncurry(rule_curry(j))
        assert alpha_equiv(back, j)

    def test_negation_swaps_boundary(self):
        j = rule_negation(rule_id("x", A))
        assert j.context[0].type == TDual(A)

    def test_exchange(self):
        j = rule_tensor_right(rule_id("x", A), rule_id("y", B))
        k = rule_exchange(j, 0)
        assert [e.type for e in k.context] == [B, A]

    def test_tensor_left_pack_unpack(self):
        j = rule_tensor_right(rule_id("x", A), rule_id("y", B))
        packed = rule_tensor_left(j, 0, "pack")
        assert len(packed.context) == 1
        assert alpha_equiv(rule_tensor_left(packed, 0, "unpack"), j)

    def test_unit_intro_elim(self):
        j = rule_id("x", A)
        with_unit = rule_unit(
            judgement(j.context,
                      list(j.soup) + [connect(Star(v("i")), ONE, UNIT)],
                      j.conclusion),
            "left", "intro")
        assert with_unit.context[0].type == UNIT
        back = rule_unit(with_unit, "left", "elim")
        assert any(c.type == UNIT for c in back.soup)

    def test_dagger_flip_arrow(self):
        j = dagger_flip(rule_id("x", A))
        assert alpha_equiv(j, rule_id("x", A))

    def test_dagger_flip_state_to_effect(self):
        st = closed(v("k"), A, [(Spider(GREEN, 0, 1), v("k"), A)])
        eff = dagger_flip(st)
        assert eff.conclusion.type == UNIT
        assert len(eff.context) == 1

    def test_apply_term_connects_function(self):
        f = arrow(combinator("id", [A]), arrow_type(A, A))
        x = closed(v("k"), A, [(Spider(GREEN, 0, 1), v("k"), A)])
        jf = rule_curry(f)
        out = apply_term(jf, x)
        assert out.conclusion.type == A
        assert not validate_linearity(out)

    def test_compose_packs_context(self):
        f = rule_tensor_right(rule_id("x", A), rule_id("y", B))
        g = rule_id("z", TTensor(A, B))
        j = compose(g, f)
        assert len(j.context) == 2


class TestLinearity:
    def test_every_rule_output_linear(self):
        j = rule_cut(rule_id("x", A), rule_id("y", A))
        assert validate_linearity(j) == []

    def test_violation_reported(self):
        j = judgement([ContextEntry(v("x"), A)], [],
                      ContextEntry(v("y"), A))
        assert validate_linearity(j) == [("x", 1), ("y", 1)]

    def test_fresh_name_avoids_collisions(self):
        assert fresh_name("p", {"p"}) == "p_1"
        assert fresh_name("p", {"p", "p_1"}) == "p_2"
        assert fresh_name("q", set()) == "q"


class TestAlphaEquiv:
    def test_renaming(self):
        j1 = rule_id("x", A)
        j2 = rule_id("other", A)
        assert alpha_equiv(j1, j2)

    def test_type_mismatch(self):
        assert not alpha_equiv(rule_id("x", A), rule_id("x", B))

    def test_soup_permutation_irrelevant(self):
        s1 = [connect(Spider(GREEN, 0, 1), v("a"), A),
              connect(v("a"), v("b"), A)]
        j1 = closed(v("b"), A, [(c.left, c.right, c.type) for c in s1])
        j2 = closed(v("b"), A,
                    [(c.left, c.right, c.type) for c in reversed(s1)])
        assert alpha_equiv(j1, j2)

    def test_wire_orientation_irrelevant(self):
        j1 = judgement([ContextEntry(v("x"), A)],
                       [connect(v("x"), v("y"), A)],
                       ContextEntry(v("y"), A))
        j2 = judgement([ContextEntry(v("x"), A)],
                       [connect(Star(v("x")), Star(v("y")), TDual(A))],
                       ContextEntry(v("y"), A))
        assert alpha_equiv(j1, j2)

    def test_different_soup_not_equiv(self):
        j1 = closed(v("k"), A, [(Spider(GREEN, 0, 1), v("k"), A)])
        j2 = closed(v("k"), A,
                    [(Spider(GREEN, 0, 1, Phase.of(1)), v("k"), A)])
        assert not alpha_equiv(j1, j2)
