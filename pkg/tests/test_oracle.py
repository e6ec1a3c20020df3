"""The matrix semantics: fixtures, spider states, and judgement values."""

import math

import numpy as np
import pytest

from daggerlc.oracle import (
    Interpretation, delta_matrix, delta_red_matrix, epsilon_matrix,
    epsilon_red_matrix, equal_up_to_scalar, fuse_states, hadamard_matrix,
    interpret, plus_state, scalar_ratio, spider_state,
)
from daggerlc.sequent import ContextEntry, closed, connect, judgement, rule_id
from daggerlc.terms import (
    GREEN, HADAMARD, RED,
    Phase, Spider, Star, TAtom, TDual, TTensor, Tensor, Var, tensor,
    tensor_type,
)

A = TAtom("A")


def v(name):
    return Var(name)


class TestFixtures:
    def test_delta_on_basis(self):
        d = delta_matrix()
        assert np.allclose(d @ [1, 0], [1, 0, 0, 0], atol=1e-12)
        assert np.allclose(d @ [0, 1], [0, 0, 0, 1], atol=1e-12)

    def test_epsilon_on_basis(self):
        e = epsilon_matrix()
        assert np.allclose(e @ [1, 0], [1], atol=1e-12)
        assert np.allclose(e @ [0, 1], [1], atol=1e-12)

    def test_delta_dagger(self):
        dd = delta_matrix().conj().T
        assert np.allclose(dd @ [1, 0, 0, 0], [1, 0], atol=1e-12)
        assert np.allclose(dd @ [0, 0, 0, 1], [0, 1], atol=1e-12)

    def test_fuse_states(self):
        pairs = [(0, 0), (math.pi, 0), (0, math.pi / 2),
                 (math.pi / 4, math.pi / 4), (math.pi, math.pi),
                 (-math.pi / 2, math.pi / 4), (math.pi / 3, math.pi / 5),
                 (2 * math.pi, math.pi)]
        for a, b in pairs:
            got = fuse_states(a, b).ravel()
            want = np.array([1, np.exp(1j * (a + b))])
            assert np.allclose(got, want, atol=1e-12)

    def test_red_fixtures_are_hadamard_conjugates(self):
        h = hadamard_matrix()
        h2 = np.kron(h, h)
        assert np.allclose(delta_red_matrix(),
                           h2 @ delta_matrix() @ h, atol=1e-12)
        assert np.allclose(epsilon_red_matrix(), epsilon_matrix() @ h,
                           atol=1e-12)

    def test_plus_state(self):
        assert np.allclose(plus_state(0).ravel(), [1, 1], atol=1e-12)
        assert np.allclose(plus_state(math.pi).ravel(), [1, -1], atol=1e-12)


class TestSpiders:
    def test_green_copy_is_delta(self):
        st = spider_state(Spider(GREEN, 1, 2))
        assert st.shape == (2, 2, 2)

    def test_phase_sits_on_all_ones(self):
        st = spider_state(Spider(GREEN, 1, 1, Phase.of(1, 2))).ravel()
        assert np.allclose(st, [1, 0, 0, 1j], atol=1e-12)

    def test_hadamard_unitary(self):
        h = hadamard_matrix()
        assert np.allclose(h @ h.conj().T, np.eye(2), atol=1e-12)


class TestInterpret:
    def test_identity_judgement(self):
        m = interpret(rule_id("x", A))
        assert np.allclose(m, np.eye(2), atol=1e-12)

    def test_state_judgement(self):
        j = closed(v("k"), A,
                   [(Spider(GREEN, 0, 1, Phase.of(1)), v("k"), A)])
        assert np.allclose(interpret(j).ravel(), [1, -1], atol=1e-12)

    def test_hadamard_wire(self):
        j = judgement([ContextEntry(v("x"), A)],
                      [connect(HADAMARD, Tensor(Star(v("x")), v("y")),
                               TTensor(TDual(A), A))],
                      ContextEntry(v("y"), A))
        assert np.allclose(interpret(j), hadamard_matrix(), atol=1e-12)

    def test_cup(self):
        j = closed(Tensor(Star(v("x")), v("x")), TTensor(TDual(A), A))
        assert np.allclose(interpret(j).ravel(), [1, 0, 0, 1], atol=1e-12)

    def test_declared_constant(self):
        arr = np.array([1, 2, 3, 4], dtype=complex)
        interp = Interpretation(constants={"c": arr})
        from daggerlc.terms import Declared

        j = closed(v("k"), TTensor(A, A),
                   [(Declared("c", TTensor(A, A)), v("k"), TTensor(A, A))],
                   [("c", TTensor(A, A))])
        assert np.allclose(interpret(j, interp).ravel(), arr, atol=1e-12)

    def test_scalar_dimension(self):
        from daggerlc.terms import Dimension, ONE, UNIT

        j = closed(ONE, UNIT, [(Dimension(A), ONE, UNIT)])
        assert np.allclose(interpret(j), [[2]], atol=1e-12)


class TestComparison:
    def test_equal_up_to_scalar(self):
        m = np.array([[1, 2], [3, 4]], dtype=complex)
        assert equal_up_to_scalar(m, (2j) * m)
        assert not equal_up_to_scalar(m, m + 1)

    def test_scalar_ratio(self):
        m = np.array([[1, 1j]])
        assert scalar_ratio(m, 3j * m) == pytest.approx(3j)

    def test_zero_matrices_equal(self):
        z = np.zeros((2, 2))
        assert equal_up_to_scalar(z, z)
