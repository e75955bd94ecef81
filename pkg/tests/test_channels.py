import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coqec import channels as ch
from coqec.errors import (CompletenessViolation, DimensionMismatch, InvalidProbability,
                          InvalidWeight, MixedDimensions)

probs = st.floats(0.0, 1.0)


def matrix_units(n):
    for i, j in itertools.product(range(n), repeat=2):
        e = np.zeros((n, n), dtype=complex)
        e[i, j] = 1
        yield e


def same_action(a, b, tol=1e-10):
    return all(np.abs(ch.apply(a, e) - ch.apply(b, e)).max() <= tol for e in matrix_units(a.n_c))


class TestNewChannel:
    def test_identity(self):
        c = ch.new_channel([np.eye(2)])
        assert c.m_e == 1 and c.n_c == 2 and c.mode is ch.Mode.TRACE_PRESERVING

    def test_split_identity(self):
        c = ch.new_channel([np.eye(2) / np.sqrt(2)] * 2)
        assert c.residual < 1e-14

    def test_overcomplete_rejected(self):
        with pytest.raises(CompletenessViolation):
            ch.new_channel([np.sqrt(0.9) * np.eye(2), np.sqrt(0.2) * ch.PAULI["X"]])

    def test_subnormalized_accepts_deficit_only(self):
        ch.new_channel([0.5 * np.eye(2)], ch.Mode.SUB_NORMALIZED)
        with pytest.raises(CompletenessViolation):
            ch.new_channel([1.1 * np.eye(2)], ch.Mode.SUB_NORMALIZED)
        with pytest.raises(CompletenessViolation):
            ch.new_channel([0.5 * np.eye(2)])

    @pytest.mark.parametrize("els", [[], [np.eye(2), np.eye(3)], [np.ones((2, 3))]])
    def test_bad_shapes(self, els):
        with pytest.raises(DimensionMismatch):
            ch.new_channel(els)

    def test_elements_read_only(self):
        c = ch.identity_channel(2)
        with pytest.raises(ValueError):
            c.elements[0, 0, 0] = 2


class TestBitFlip:
    def test_counts(self):
        c = ch.bit_flip_channel(3, 0.2)
        assert c.m_e == 8 and c.n_c == 8

    def test_p_zero_single_qubit(self):
        c = ch.bit_flip_channel(1, 0.0)
        assert c.m_e == 2
        np.testing.assert_allclose(c.elements[0], np.eye(2))
        np.testing.assert_allclose(c.elements[1], 0)

    def test_half_probability_norms(self):
        # each factor sqrt(1/2) I or sqrt(1/2) X: Frobenius norm 1 per qubit
        c = ch.bit_flip_channel(2, 0.5)
        np.testing.assert_allclose(np.linalg.norm(c.elements, axis=(1, 2)), 1.0)

    def test_invalid_probability(self):
        with pytest.raises(InvalidProbability):
            ch.bit_flip_channel(3, 1.2)

    @given(st.integers(1, 4), probs)
    def test_trace_preserving(self, q, p):
        c = ch.bit_flip_channel(q, p)
        assert np.linalg.norm(c.completeness() - np.eye(2**q)) <= 1e-10


class TestWeightedPauli:
    @pytest.mark.parametrize("q,count", [(5, 26), (7, 64)])
    def test_counts(self, q, count):
        c = ch.weighted_pauli_channel(q, 0.1, "Y", 3)
        assert c.m_e == count and c.mode is ch.Mode.SUB_NORMALIZED

    def test_truncation_mass(self):
        # kept weight: P(at most 3 of 5 errors) on the diagonal of sum E^H E
        c = ch.weighted_pauli_channel(5, 0.3, "Y", 3)
        p = 0.3
        kept = sum(comb(5, w) * p**w * (1 - p) ** (5 - w) for w in range(4))
        np.testing.assert_allclose(c.completeness(), kept * np.eye(32), atol=1e-12)

    @given(probs)
    def test_full_weight_x_is_bit_flip(self, p):
        a = ch.weighted_pauli_channel(3, p, "X", 3)
        b = ch.bit_flip_channel(3, p)
        np.testing.assert_array_equal(a.elements, b.elements)

    def test_element_structure(self):
        c = ch.weighted_pauli_channel(2, 0.2, "Z", 1)
        z, i = ch.PAULI["Z"], ch.PAULI["I"]
        expect = [0.8 * np.kron(i, i), np.sqrt(0.16) * np.kron(i, z), np.sqrt(0.16) * np.kron(z, i)]
        np.testing.assert_allclose(c.elements, expect, atol=1e-15)

    @pytest.mark.parametrize("w", [-1, 4])
    def test_invalid_weight(self, w):
        with pytest.raises(InvalidWeight):
            ch.weighted_pauli_channel(3, 0.1, "Y", w)


class TestRandomChannel:
    def test_hamiltonian_size(self):
        assert ch.random_channel(4, 4, 0).elements.shape == (4, 4, 4)

    @given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 2**32))
    def test_complete(self, n, m, seed):
        c = ch.random_channel(n, m, seed)
        assert c.residual <= 1e-10

    def test_deterministic(self):
        a, b = ch.random_channel(4, 4, 99), ch.random_channel(4, 4, 99)
        assert a.elements.tobytes() == b.elements.tobytes()
        assert a.elements.tobytes() != ch.random_channel(4, 4, 100).elements.tobytes()

    def test_matches_unitary_columns(self):
        from scipy.linalg import expm
        rng = np.random.default_rng(3)
        h = ch.random_hermitian(rng, 8)
        u = expm(-1j * h)[:, :4]
        c = ch.random_channel(4, 2, np.random.default_rng(3))
        np.testing.assert_allclose(c.elements, u.reshape(2, 4, 4), atol=1e-12)


class TestEnsembles:
    def test_single_member(self):
        c = ch.bit_flip_channel(2, 0.3)
        avg = ch.average_channel(ch.ensemble([c], [1.0]))
        np.testing.assert_array_equal(avg.elements, c.elements)

    def test_two_copies(self):
        c = ch.bit_flip_channel(1, 0.3)
        avg = ch.average_channel(ch.ensemble([c, c]))
        assert avg.m_e == 4
        np.testing.assert_allclose(avg.elements[2:], c.elements / np.sqrt(2))
        assert same_action(avg, c)

    def test_bitflip_grid_count_and_reduction(self):
        members = [ch.bit_flip_channel(3, k / 10) for k in range(10)]
        avg = ch.average_channel(ch.ensemble(members))
        assert avg.m_e == 80
        red = ch.reduce_kraus(avg)
        assert red.m_e == 8
        assert same_action(avg, red)

    def test_padding(self):
        a, b = ch.identity_channel(2), ch.bit_flip_channel(1, 0.5)
        avg = ch.average_channel(ch.ensemble([a, b], [0.25, 0.75]))
        assert avg.m_e == 4
        np.testing.assert_array_equal(avg.elements[1], 0)

    def test_mixed_dimensions(self):
        with pytest.raises(MixedDimensions):
            ch.ensemble([ch.identity_channel(2), ch.identity_channel(4)])

    def test_bad_probabilities(self):
        with pytest.raises(InvalidProbability):
            ch.ensemble([ch.identity_channel(2)] * 2, [0.7, 0.7])

    @given(st.lists(probs, min_size=2, max_size=4), st.integers(0, 1000))
    def test_action_is_mixture(self, ps, seed):
        members = [ch.bit_flip_channel(2, p) for p in ps]
        w = np.random.default_rng(seed).dirichlet(np.ones(len(ps)))
        avg = ch.average_channel(ch.ensemble(members, w))
        rho = np.random.default_rng(seed + 1).standard_normal((4, 4))
        rho = rho @ rho.T
        mix = sum(wi * ch.apply(m, rho) for wi, m in zip(w, members))
        np.testing.assert_allclose(ch.apply(avg, rho), mix, atol=1e-10)


class TestReduce:
    def test_rank_one(self):
        red = ch.reduce_kraus(ch.new_channel([np.eye(2) / np.sqrt(2)] * 2))
        assert red.m_e == 1
        np.testing.assert_allclose(red.elements[0], np.eye(2), atol=1e-12)

    @given(st.integers(1, 3), st.integers(1, 12), st.integers(0, 10**6))
    def test_equivalent_and_bounded(self, n, m, seed):
        c = ch.random_channel(n, m, seed)
        red = ch.reduce_kraus(c)
        assert red.m_e <= n * n
        assert same_action(c, red)

    def test_descending_order(self):
        red = ch.reduce_kraus(ch.random_channel(2, 6, 5))
        norms = np.linalg.norm(red.elements, axis=(1, 2))
        assert np.all(np.diff(norms) <= 1e-12)


class TestApply:
    def test_identity(self, rng):
        rho = rng.standard_normal((4, 4))
        np.testing.assert_allclose(ch.apply(ch.identity_channel(4), rho), rho)

    def test_deterministic_flip(self):
        out = ch.apply(ch.bit_flip_channel(1, 1.0), np.diag([1.0, 0.0]))
        np.testing.assert_allclose(out, np.diag([0.0, 1.0]))

    def test_partial_flip(self):
        out = ch.apply(ch.bit_flip_channel(1, 0.3), np.diag([1.0, 0.0]))
        np.testing.assert_allclose(out, np.diag([0.7, 0.3]), atol=1e-15)

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            ch.apply(ch.identity_channel(2), np.eye(3))

    @given(st.integers(0, 10**6))
    def test_trace_preserved(self, seed):
        c = ch.random_channel(3, 3, seed)
        rho = np.random.default_rng(seed).standard_normal((3, 3))
        rho = rho @ rho.T
        assert abs(np.trace(ch.apply(c, rho)) - np.trace(rho)) <= 1e-10 * max(1, np.trace(rho))

    @given(st.integers(0, 10**6))
    def test_mixing_preserves_action(self, seed):
        from conftest import random_unitary
        c = ch.random_channel(2, 3, seed)
        w = random_unitary(np.random.default_rng(seed), 3)
        assert same_action(c, ch.mix_elements(c, w))
