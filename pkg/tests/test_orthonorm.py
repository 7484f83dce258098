import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dion2.errors import NumericalError
from dion2.linalg import gram_schmidt, jacobi_svd, transpose
from dion2.orthonorm import (
    DEFAULT_NS,
    NewtonSchulzParams,
    newton_schulz,
    newton_schulz_auto,
    rms_to_rms_norm,
)

LO, HI = 0.6, 1.1


def sigma(o):
    return jacobi_svd(o)


def in_band(s):
    return s.min() >= LO and s.max() <= HI


class TestExamples:
    def test_orthogonal_is_near_fixed_point(self, gen):
        q = gram_schmidt(gen.standard_normal((16, 16)))
        assert np.abs(newton_schulz(q) - q).max() <= 2e-2

    def test_badly_scaled_diagonal(self):
        s = sigma(newton_schulz(np.diag([10.0, 1e-3])))
        assert s[0] == pytest.approx(1.0, abs=0.1)
        assert LO <= s[1] <= HI

    def test_gaussian_64x256(self, gen):
        assert in_band(sigma(newton_schulz(gen.standard_normal((64, 256)))))

    def test_auto_transposes_tall(self, gen):
        m = gen.standard_normal((256, 64))
        assert np.array_equal(newton_schulz_auto(m), transpose(newton_schulz(transpose(m))))

    def test_auto_square_is_plain(self, gen):
        m = gen.standard_normal((20, 20))
        assert np.array_equal(newton_schulz_auto(m), newton_schulz(m))

    def test_auto_8x3(self, gen):
        o = newton_schulz_auto(gen.standard_normal((8, 3)))
        assert o.shape == (8, 3) and in_band(sigma(o))

    def test_zero_input(self):
        assert np.array_equal(newton_schulz(np.zeros((3, 5))), np.zeros((3, 5)))

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            newton_schulz(np.array([[1.0, np.inf]]))

    def test_float32_kept(self, gen):
        assert newton_schulz(gen.standard_normal((4, 8)).astype(np.float32)).dtype == np.float32

    def test_plain_quintic_preset(self):
        p = NewtonSchulzParams.quintic()
        assert p.num_iters == 5 and set(p.coefficients) == {(3.4445, -4.7750, 2.0315)}

    def test_params_validation(self):
        with pytest.raises(ValueError):
            NewtonSchulzParams(())
        with pytest.raises(ValueError):
            NewtonSchulzParams(((1.0, 2.0),))
        with pytest.raises(ValueError):
            NewtonSchulzParams(((1.0, 0.0, 0.0),), eps=0.0)


def test_scalar_map_matches_matrix_iteration(gen):
    # Singular values evolve through the scalar polynomial.
    u = gram_schmidt(gen.standard_normal((6, 4)))
    v = gram_schmidt(gen.standard_normal((4, 4)))
    s = np.array([3.0, 1.0, 0.1, 1e-3])
    m = (u * s) @ v.T
    want = DEFAULT_NS.scalar_map(s / (np.linalg.norm(s) + DEFAULT_NS.eps))
    got = newton_schulz_auto(m)
    assert np.abs(got - (u * want) @ v.T).max() <= 1e-10


def test_default_scalar_band():
    x = np.logspace(np.log10(2e-7), 0, 20001)
    y = DEFAULT_NS.scalar_map(x)
    assert y.min() >= 0.98 and y.max() <= 1.0 + 1e-12


class TestInvariants:
    @pytest.mark.parametrize("shape,r", [((32, 32), 8), ((48, 16), 4)])
    def test_low_rank_commutation(self, gen, shape, r):
        for _ in range(10):
            m = gen.standard_normal(shape)
            v = gram_schmidt(gen.standard_normal((shape[1], r)))
            lhs = newton_schulz(m @ v @ v.T)
            rhs = newton_schulz(m @ v) @ v.T
            assert np.abs(lhs - rhs).max() <= 1e-8

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.floats(1e-6, 1e6), st.integers(0, 2**32))
    def test_scale_invariance(self, m, n, c, seed):
        a = np.random.default_rng(seed).standard_normal((m, n))
        assert np.abs(newton_schulz_auto(c * a) - newton_schulz_auto(a)).max() <= 1e-8

    def test_singular_vectors_preserved(self, gen):
        want = np.array([4.0, 2.0, 1.0, 0.5, 0.25])
        u = gram_schmidt(gen.standard_normal((9, 5)))
        v = gram_schmidt(gen.standard_normal((7, 5)))
        m = (u * want) @ v.T
        o = newton_schulz_auto(m)
        mu, _, mvt = jacobi_svd(m, compute_uv=True)
        ou, _, ovt = jacobi_svd(o, compute_uv=True)
        # Principal angles between the rank-5 subspaces.
        for a, b in ((mu[:, :5], ou[:, :5]), (mvt[:5].T, ovt[:5].T)):
            cosines = np.linalg.svd(a.T @ b, compute_uv=False)
            assert np.arccos(np.clip(cosines.min(), -1, 1)) <= 1e-4
        # Individual vectors also line up: U^T O V is diagonal.
        core = mu.T @ o @ mvt.T
        assert np.abs(core - np.diag(np.diag(core))).max() <= 1e-8

    def test_permutation_equivariance(self, gen):
        m = gen.standard_normal((10, 14))
        p = gen.permutation(10)
        assert np.abs(newton_schulz(m[p]) - newton_schulz(m)[p]).max() <= 1e-12

    def test_sigma_range_small_suite(self, gen):
        for _ in range(20):
            m, n = gen.integers(1, 48, size=2)
            assert in_band(sigma(newton_schulz_auto(gen.standard_normal((m, n)))))


class TestRmsNorm:
    def test_scaled_isometry(self, gen):
        eta, rows, cols = 0.02, 12, 30
        q = gram_schmidt(gen.standard_normal((cols, rows))).T
        a = eta * np.sqrt(rows / cols) * q
        assert rms_to_rms_norm(a) == pytest.approx(eta, rel=1e-6)
        assert rms_to_rms_norm(a, method="jacobi") == pytest.approx(eta, rel=1e-10)

    def test_zero(self):
        assert rms_to_rms_norm(np.zeros((3, 4))) == 0.0

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            rms_to_rms_norm(np.eye(2), method="qr")
