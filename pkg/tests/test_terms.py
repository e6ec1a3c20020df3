"""Types, phases, terms, and the linear-negation normal form."""

from fractions import Fraction

import pytest

from daggerlc.terms import (
    GREEN, HADAMARD, ONE, RED, UNIT,
    Declared, Dimension, Phase, Spider, Star, TAtom, TDual, TTensor, Tensor,
    Var, arrow_type, combinator_type, combinator_with_soup, lambda_abs,
    negate_term, negate_type, tensor, tensor_type, var_occurrences,
)

A = TAtom("A")
B = TAtom("B")


class TestTypes:
    def test_negate_atom(self):
        assert negate_type(A) == TDual(A)
        assert negate_type(TDual(A)) == A

    def test_negate_unit_fixed(self):
        assert negate_type(UNIT) == UNIT

    def test_negate_tensor_swaps(self):
        assert negate_type(TTensor(A, B)) == TTensor(TDual(B), TDual(A))

    def test_negate_involutive(self):
        for t in (A, UNIT, TTensor(A, B), TTensor(TTensor(A, B), TDual(A))):
            assert negate_type(negate_type(t)) == t

    def test_tensor_type_flattens_left(self):
        assert tensor_type(A, B, A) == TTensor(TTensor(A, B), A)

    def test_rendering(self):
        assert str(TTensor(A, TDual(B))) == "A (x) B*"
        assert str(TTensor(A, TTensor(B, A))) == "A (x) (B (x) A)"


class TestPhases:
    def test_reduced_modulo_two_pi(self):
        assert Phase.of(5, 2) == Phase.of(1, 2)
        assert Phase.of(-1, 4) == Phase.of(7, 4)

    def test_addition_and_negation(self):
        assert Phase.of(1, 2) + Phase.of(3, 2) == Phase.of(0)
        assert -Phase.of(1, 4) == Phase.of(7, 4)

    def test_rendering(self):
        assert str(Phase.of(0)) == "0"
        assert str(Phase.of(1)) == "1pi"
        assert str(Phase.of(1, 2)) == "1/2pi"

    def test_radians(self):
        import math

        assert Phase.of(1, 2).radians() == pytest.approx(math.pi / 2)


class TestNegation:
    def test_var(self):
        assert negate_term(Var("x")) == Star(Var("x"))
        assert negate_term(Star(Var("x"))) == Var("x")

    def test_tensor_swaps(self):
        t = Tensor(Var("x"), Var("y"))
        assert negate_term(t) == Tensor(Star(Var("y")), Star(Var("x")))

    def test_spider_transposes_and_conjugates(self):
        sp = Spider(GREEN, 1, 2, Phase.of(1, 4))
        assert negate_term(sp) == Spider(GREEN, 2, 1, Phase.of(-1, 4))

    def test_self_dual_constants(self):
        for t in (ONE, HADAMARD, Dimension(A)):
            assert negate_term(t) == t

    def test_involutive(self):
        terms = [Var("x"), Tensor(Var("x"), Star(Var("y"))),
                 Spider(RED, 2, 0, Phase.of(1)), Declared("m", TTensor(A, B))]
        for t in terms:
            assert negate_term(negate_term(t)) == t

    def test_var_occurrences(self):
        t = Tensor(Var("x"), Tensor(Star(Var("y")), Var("x")))
        occ = var_occurrences(t)
        assert occ["x"] == 2 and occ["y"] == 1


class TestCombinators:
    def test_lambda_abbreviation(self):
        assert lambda_abs(Var("a"), Var("a")) == Tensor(Star(Var("a")),
                                                        Var("a"))

    def test_arrow_type(self):
        assert arrow_type(A, B) == TTensor(TDual(A), B)

    def test_sigma(self):
        term, ty, soup = combinator_with_soup("sigma", [A, B])
        assert ty == arrow_type(TTensor(A, B), TTensor(B, A))
        assert soup == []

    def test_tbar_carries_application_soup(self):
        _, _, soup = combinator_with_soup("tbar", [A, B, A, B])
        assert len(soup) == 2

    def test_arity_checked(self):
        with pytest.raises(ValueError):
            combinator_type("alpha", [A])

    def test_spider_str(self):
        assert str(Spider(GREEN, 1, 2)) == "G{1,2}"
        assert str(Spider(RED, 0, 1, Phase.of(1))) == "R{0,1}[1pi]"
