import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmperm.errors import DimensionError, NotPositiveSemidefiniteError
from rmperm.linalg import (
    centering,
    direct_sum,
    kronecker,
    moore_penrose,
    psd_sqrt,
    sym_eigen,
)


def ar_matrix(rho, t):
    lags = np.abs(np.subtract.outer(np.arange(t), np.arange(t)))
    return rho ** lags


def penrose_residual(a, ap):
    scale = 1.0 + np.linalg.norm(a, "fro")
    return max(
        np.linalg.norm(a @ ap @ a - a, "fro"),
        np.linalg.norm(ap @ a @ ap - ap, "fro"),
        np.linalg.norm((a @ ap) - (a @ ap).T, "fro"),
        np.linalg.norm((ap @ a) - (ap @ a).T, "fro"),
    ) / scale


class TestCentering:
    def test_t1_is_zero(self):
        assert centering(1) == pytest.approx(np.zeros((1, 1)))

    def test_t2_explicit(self):
        np.testing.assert_allclose(centering(2), [[0.5, -0.5], [-0.5, 0.5]])

    def test_t4_idempotent_and_annihilates_ones(self):
        p = centering(4)
        np.testing.assert_allclose(p @ p, p, atol=1e-14)
        assert np.linalg.norm(p @ np.ones(4)) <= 1e-12
        np.testing.assert_allclose(p, p.T)

    def test_zero_dimension_rejected(self):
        with pytest.raises(DimensionError):
            centering(0)


class TestKronecker:
    def test_identities(self):
        np.testing.assert_allclose(kronecker(np.eye(2), np.eye(3)), np.eye(6))

    def test_scalar_case(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_allclose(kronecker([[2.5]], b), 2.5 * b)

    def test_matches_block_assembly(self):
        # Brute-force block assembly of (1/2) 1_2' (x) P_3.
        a = np.full((1, 2), 0.5)
        b = centering(3)
        expected = np.zeros((1 * 3, 2 * 3))
        for i in range(1):
            for j in range(2):
                expected[i * 3:(i + 1) * 3, j * 3:(j + 1) * 3] = a[i, j] * b
        np.testing.assert_allclose(kronecker(a, b), expected)

    def test_trace_multiplicative(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.standard_normal((3, 3))
            b = rng.standard_normal((4, 4))
            assert np.trace(kronecker(a, b)) == pytest.approx(
                np.trace(a) * np.trace(b), rel=1e-12, abs=1e-12
            )


class TestDirectSum:
    def test_identities(self):
        np.testing.assert_allclose(direct_sum([np.eye(2), np.eye(3)]), np.eye(5))

    def test_scalars(self):
        np.testing.assert_allclose(direct_sum([[[2.0]], [[3.0]]]), np.diag([2.0, 3.0]))

    def test_trace_additive_and_off_blocks_zero(self):
        rng = np.random.default_rng(1)
        blocks = [rng.standard_normal((2, 2)) for _ in range(3)]
        out = direct_sum(blocks)
        assert out.shape == (6, 6)
        assert np.trace(out) == pytest.approx(sum(np.trace(b) for b in blocks))
        assert np.all(out[0:2, 2:] == 0.0)
        assert np.all(out[2:4, 4:] == 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            direct_sum([])


class TestMoorePenrose:
    def test_identity(self):
        np.testing.assert_allclose(moore_penrose(np.eye(3)), np.eye(3))

    def test_zero_matrix(self):
        out = moore_penrose(np.zeros((2, 3)))
        assert out.shape == (3, 2)
        assert np.all(out == 0.0)

    def test_rank_deficient_diagonal(self):
        np.testing.assert_allclose(moore_penrose(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_penrose_axioms_random(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            rows, cols = rng.integers(1, 9, size=2)
            a = rng.standard_normal((rows, cols))
            if rng.random() < 0.3:  # make some inputs rank deficient
                a[:, 0] = a[:, -1] if cols > 1 else 0.0
            assert penrose_residual(a, moore_penrose(a)) <= 1e-8

    @settings(max_examples=60, deadline=None)
    @given(
        rows=st.integers(1, 8),
        cols=st.integers(1, 8),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_penrose_axioms_property(self, rows, cols, seed):
        a = np.random.default_rng(seed).standard_normal((rows, cols))
        assert penrose_residual(a, moore_penrose(a)) <= 1e-8


class TestSymEigen:
    def test_identity_spectrum(self):
        eig = sym_eigen(np.eye(5))
        np.testing.assert_allclose(eig.values, np.ones(5))

    def test_centering_spectrum(self):
        eig = sym_eigen(centering(6))
        np.testing.assert_allclose(eig.values[:5], np.ones(5), atol=1e-12)
        assert abs(eig.values[5]) <= 1e-12

    def test_ar_trace_identity(self):
        a = ar_matrix(0.6, 4)
        eig = sym_eigen(a)
        assert eig.values.sum() == pytest.approx(4.0)

    def test_orthonormal_and_reconstructs(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((6, 6))
        a = x + x.T
        eig = sym_eigen(a)
        np.testing.assert_allclose(eig.vectors.T @ eig.vectors, np.eye(6), atol=1e-10)
        err = np.linalg.norm(eig.reconstruct() - a, "fro")
        assert err <= 1e-10 * np.linalg.norm(a, "fro") + 1e-12

    def test_descending_order(self):
        eig = sym_eigen(np.diag([1.0, 3.0, 2.0]))
        np.testing.assert_allclose(eig.values, [3.0, 2.0, 1.0])

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            sym_eigen([[0.0, 1.0], [0.0, 0.0]])


class TestPsdSqrt:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_ar_reconstruction(self):
        a = ar_matrix(0.6, 4)
        s = psd_sqrt(a)
        assert np.linalg.norm(s @ s - a, "fro") <= 1e-10

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveSemidefiniteError):
            psd_sqrt(np.diag([1.0, -0.5]))

    @settings(max_examples=40, deadline=None)
    @given(dim=st.integers(1, 7), seed=st.integers(0, 2**32 - 1))
    def test_square_reconstructs_psd(self, dim, seed):
        x = np.random.default_rng(seed).standard_normal((dim, dim))
        a = x @ x.T
        s = psd_sqrt(a)
        norm = np.linalg.norm(a, "fro")
        assert np.linalg.norm(s @ s - a, "fro") <= 1e-8 * (1.0 + norm)
