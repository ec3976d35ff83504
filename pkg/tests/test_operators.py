import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfhalpern import instances as inst
from pfhalpern.core import inner, norm
from pfhalpern.operators import (OperatorMetadata, affine_operator, bilinear_saddle,
                                 identity_operator, quadratic_saddle, regularize,
                                 resolvent_target_operator, saddle_operator, scale,
                                 verify_cocoercive, zero_operator)

seeds = st.integers(0, 2**32 - 1)


class TestAffine:
    def test_identity(self):
        F = affine_operator(np.eye(2), np.zeros(2))
        md = F.metadata
        assert (md.lipschitz_L, md.strong_mono_mu, md.cocoercivity_gamma) == (1, 1, 1)
        assert np.array_equal(F([1.0, 2.0]), [1.0, 2.0])

    def test_rotation(self):
        F = affine_operator([[0, 1], [-1, 0]])
        md = F.metadata
        assert md.lipschitz_L == pytest.approx(1)
        assert md.strong_mono_mu == 0
        assert md.cocoercivity_gamma is None
        assert np.array_equal(F([1.0, 2.0]), [2.0, -1.0])

    def test_diagonal(self):
        F = affine_operator(np.diag([2.0, 0.5]), [1.0, -1.0])
        assert F.metadata.lipschitz_L == pytest.approx(2)
        assert F.metadata.strong_mono_mu == pytest.approx(0.5)
        assert np.allclose(F([1.0, 1.0]), [3.0, -0.5])

    def test_singular_psd_keeps_gamma(self):
        F = affine_operator(np.diag([2.0, 0.0]))
        assert F.metadata.cocoercivity_gamma == pytest.approx(0.5)
        assert F.metadata.strong_mono_mu == 0

    def test_non_square(self):
        with pytest.raises(ValueError):
            affine_operator(np.ones((2, 3)))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            affine_operator(np.eye(2), [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            identity_operator(2)([1.0, 2.0, 3.0])


class TestMetadata:
    def test_gamma_bounds_L(self):
        with pytest.raises(ValueError):
            OperatorMetadata(lipschitz_L=3.0, cocoercivity_gamma=0.5)

    def test_mu_bounded_by_L(self):
        with pytest.raises(ValueError):
            OperatorMetadata(lipschitz_L=1.0, strong_mono_mu=2.0)

    def test_merged(self):
        md = OperatorMetadata(1.0, 0.5, 1.0).merged(mu=0.25)
        assert md == OperatorMetadata(1.0, 0.25, 1.0)


class TestSaddle:
    def test_bilinear(self):
        F = saddle_operator(lambda x, y: y, lambda x, y: x, 1, 1)
        assert np.array_equal(F([3.0, 5.0]), [5.0, -3.0])
        assert np.array_equal(bilinear_saddle(1)([3.0, 5.0]), [5.0, -3.0])

    def test_decoupled_quadratic(self):
        F = saddle_operator(lambda x, y: x, lambda x, y: -y, 2, 2)
        u = np.array([1.0, 2.0, 3.0, 4.0])
        assert np.array_equal(F(u), u)

    def test_quadratic_block_matrix(self):
        Q, R = np.diag([1.0, 2.0]), np.diag([3.0, 0.0])
        F = quadratic_saddle(Q=Q, R=R)
        expected = np.block([[Q, np.eye(2)], [-np.eye(2), R]])
        assert np.array_equal(F.matrix, expected)

    def test_block_dimension_check(self):
        F = saddle_operator(lambda x, y: np.zeros(3), lambda x, y: y, 2, 2)
        with pytest.raises(ValueError):
            F(np.zeros(4))
        with pytest.raises(ValueError):
            quadratic_saddle(Q=np.eye(3), B=np.eye(2))


class TestRegularize:
    def test_zero_becomes_identity(self):
        F = regularize(zero_operator(2), 1.0, np.zeros(2))
        assert np.array_equal(F([1.0, -2.0]), [1.0, -2.0])

    def test_identity_doubles(self):
        F = regularize(identity_operator(2), 1.0, np.zeros(2))
        assert np.array_equal(F([1.0, -2.0]), [2.0, -4.0])
        assert (F.metadata.lipschitz_L, F.metadata.strong_mono_mu) == (2, 2)

    def test_rotation_metadata(self):
        F = regularize(bilinear_saddle(1), 0.1, np.zeros(2))
        assert F.metadata.strong_mono_mu == pytest.approx(0.1)
        assert F.metadata.lipschitz_L == pytest.approx(1.1)

    def test_mu_positive(self):
        with pytest.raises(ValueError):
            regularize(identity_operator(2), 0.0, np.zeros(2))

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.floats(0.01, 5.0))
    def test_strong_monotonicity(self, seed, mu):
        rng = np.random.default_rng(seed)
        base = inst.monotone_affine(rng).operator
        F = regularize(base, mu, rng.standard_normal(base.dim))
        for _ in range(20):
            u, v = rng.standard_normal((2, base.dim))
            assert inner(F(u) - F(v), u - v) >= mu * norm(u - v) ** 2 - 1e-10


class TestResolventTarget:
    def test_zero_operator(self):
        F = resolvent_target_operator(zero_operator(2), np.array([1.0, 0.0]))
        assert np.array_equal(F([1.0, 0.0]), [0.0, 0.0])

    def test_identity(self):
        F = resolvent_target_operator(identity_operator(2), np.array([2.0, 0.0]))
        assert np.array_equal(F([1.0, 0.0]), [0.0, 0.0])
        assert F.metadata.strong_mono_mu == 2 and F.metadata.lipschitz_L == 2

    def test_rotation(self):
        F = resolvent_target_operator(bilinear_saddle(1), np.array([1.0, 1.0]))
        assert np.allclose(F([0.0, 1.0]), 0.0)
        assert F.metadata.strong_mono_mu == 1


class TestVerifyCocoercive:
    def test_identity(self):
        assert verify_cocoercive(identity_operator(2), 1.0, np.array([1.0, 2.0]), np.zeros(2))

    def test_rotation_fails(self):
        assert not verify_cocoercive(bilinear_saddle(1), 0.5, np.array([1.0, 0.0]), np.zeros(2))

    @given(seeds)
    def test_scaled_identity_equality(self, seed):
        rng = np.random.default_rng(seed)
        F = scale(identity_operator(3), 2.0)
        u, v = rng.standard_normal((2, 3))
        assert verify_cocoercive(F, 0.5, u, v)
        dF = F(u) - F(v)
        assert inner(dF, u - v) == pytest.approx(0.5 * norm(dF) ** 2, rel=1e-12)


class TestScale:
    def test_metadata(self):
        F = scale(affine_operator(np.diag([2.0, 1.0])), 0.5)
        assert F.metadata.lipschitz_L == pytest.approx(1.0)
        assert F.metadata.cocoercivity_gamma == pytest.approx(1.0)

    def test_positive_factor(self):
        with pytest.raises(ValueError):
            scale(identity_operator(1), 0.0)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_random_affine_monotone_and_lipschitz(seed):
    rng = np.random.default_rng(seed)
    F = inst.monotone_affine(rng).operator
    L = F.metadata.lipschitz_L
    for _ in range(40):
        u, v = rng.standard_normal((2, F.dim))
        d = F(u) - F(v)
        assert inner(d, u - v) >= -1e-10
        assert norm(d) <= L * norm(u - v) * (1 + 1e-12) + 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_quadratic_saddle_monotone(seed):
    rng = np.random.default_rng(seed)
    Q = inst.psd_matrix(rng, 3, 0.0, 2.0)
    R = inst.psd_matrix(rng, 2, 0.0, 2.0)
    F = quadratic_saddle(Q=Q, B=rng.standard_normal((3, 2)), R=R,
                         bx=rng.standard_normal(3), by=rng.standard_normal(2))
    for _ in range(40):
        u, v = rng.standard_normal((2, 5))
        assert inner(F(u) - F(v), u - v) >= -1e-10


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_declared_cocoercivity_holds(seed):
    rng = np.random.default_rng(seed)
    F = inst.cocoercive_affine(rng).operator
    for _ in range(40):
        u, v = rng.standard_normal((2, F.dim))
        assert verify_cocoercive(F, F.metadata.cocoercivity_gamma, u, v)
