import itertools

import numpy as np
import pytest

from gqg.models import EvaluatorMode, Grid, ModelParams, NonlinearEvaluator
from gqg.services.galerkin_rhs import (
    ANTISYMMETRIC_KERNEL,
    TRANSPORT_KERNEL,
    direct_convolution,
    nonlinear_term,
    pairing_S,
    perp_pairing,
    rhs,
    transport_pairing,
    triple_sum_S,
)
from gqg.services.spectral_core import symbol_power
from gqg.tests.fields import cosine_field, random_field

DIRECT = NonlinearEvaluator(mode=EvaluatorMode.DIRECT_CONVOLUTION)
PSEUDOSPECTRAL = NonlinearEvaluator(mode=EvaluatorMode.PSEUDOSPECTRAL)


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


class TestNonlinearTerm:
    """Test cases for the truncated transport term"""

    @pytest.mark.parametrize("seed", range(20))
    def test_direct_matches_pseudospectral(self, small_grid, subcritical_params, seed):
        """Test that the literal double sum and the dealiased product agree"""
        theta = random_field(small_grid, seed=seed)

        direct = nonlinear_term(theta, subcritical_params, DIRECT)
        fast = nonlinear_term(theta, subcritical_params, PSEUDOSPECTRAL)

        assert _relative_error(fast.coeffs, direct.coeffs) < 1e-10

    def test_direct_matches_pseudospectral_supercritical(self, small_grid, supercritical_params):
        """Test oracle agreement for a second parameter set"""
        theta = random_field(small_grid, seed=99, decay=0.5)

        direct = nonlinear_term(theta, supercritical_params, DIRECT)
        fast = nonlinear_term(theta, supercritical_params, PSEUDOSPECTRAL)

        assert _relative_error(fast.coeffs, direct.coeffs) < 1e-10

    def test_kernels_agree(self, small_grid, subcritical_params):
        """Test that the transport and antisymmetrized kernels give the same sum"""
        theta = random_field(small_grid, seed=4)

        transport = direct_convolution(theta, subcritical_params, TRANSPORT_KERNEL)
        antisymmetric = direct_convolution(theta, subcritical_params, ANTISYMMETRIC_KERNEL)

        assert _relative_error(antisymmetric, transport) < 1e-12

    def test_unknown_kernel(self, small_grid, subcritical_params):
        """Test that an unknown kernel name is refused"""
        with pytest.raises(ValueError):
            direct_convolution(random_field(small_grid, seed=0), subcritical_params, "symmetric")

    @pytest.mark.parametrize("mode", [(1, 0), (2, -3), (0, 4)])
    def test_single_mode_has_no_self_interaction(self, mode):
        """Test that one mode and its conjugate produce no transport"""
        grid = Grid(N=4)
        theta = cosine_field(grid, [(mode[0], mode[1], 1.3)])
        params = ModelParams(alpha=0.75, beta=0.75)

        for evaluator in (DIRECT, PSEUDOSPECTRAL):
            B = nonlinear_term(theta, params, evaluator)
            assert np.max(np.abs(B.coeffs)) < 1e-13

    def test_equal_unit_modes_cancel(self, subcritical_params):
        """Test that cos x1 + cos x2 is a steady state of transport"""
        grid = Grid(N=4)
        theta = cosine_field(grid, [(1, 0, 1.0), (0, 1, 1.0)])

        B = nonlinear_term(theta, subcritical_params, DIRECT)

        assert np.max(np.abs(B.coeffs)) < 1e-15

    def test_two_mode_hand_evaluation(self):
        """Test cos x1 + cos 2x2 against the hand-evaluated double sum"""
        beta = 0.75
        params = ModelParams(alpha=0.75, beta=beta)
        grid = Grid(N=4)
        theta = cosine_field(grid, [(1, 0, 1.0), (0, 2, 1.0)])
        expected = 0.5 * (1.0 - 2.0 ** (-2.0 * beta))

        for evaluator in (DIRECT, PSEUDOSPECTRAL):
            B = nonlinear_term(theta, params, evaluator)
            assert B.coefficient(1, 2) == pytest.approx(expected, abs=1e-14)
            assert B.coefficient(-1, -2) == pytest.approx(expected, abs=1e-14)
            assert B.coefficient(1, -2) == pytest.approx(-expected, abs=1e-14)
            assert B.coefficient(-1, 2) == pytest.approx(-expected, abs=1e-14)
            others = np.abs(B.coeffs).copy()
            for k1, k2 in [(1, 2), (-1, -2), (1, -2), (-1, 2)]:
                others[grid.N + k1, grid.N + k2] = 0.0
            assert np.max(others) < 1e-14

    def test_mean_mode_is_zero(self, small_grid, subcritical_params):
        """Test that the k = 0 output is exactly zero"""
        theta = random_field(small_grid, seed=6)
        N = small_grid.N

        for evaluator in (DIRECT, PSEUDOSPECTRAL):
            assert nonlinear_term(theta, subcritical_params, evaluator).coeffs[N, N] == 0

    @pytest.mark.parametrize("factor", [2.0, -1.0])
    def test_quadratic_scaling(self, small_grid, subcritical_params, factor):
        """Test B(c theta) = c^2 B(theta)"""
        theta = random_field(small_grid, seed=12)

        base = nonlinear_term(theta, subcritical_params, PSEUDOSPECTRAL)
        scaled = nonlinear_term(theta.with_coeffs(factor * theta.coeffs), subcritical_params, PSEUDOSPECTRAL)

        assert _relative_error(scaled.coeffs, factor ** 2 * base.coeffs) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_transport_conserves_energy(self, small_grid, subcritical_params, seed):
        """Test Re sum conj(theta) B = 0 relative to ||theta||^3"""
        theta = random_field(small_grid, seed=seed)
        norm = float(np.sqrt(np.sum(np.abs(theta.coeffs) ** 2)))

        B = nonlinear_term(theta, subcritical_params, PSEUDOSPECTRAL)

        assert abs(transport_pairing(theta, B)) <= 1e-12 * norm ** 3

    def test_output_is_hermitian(self, small_grid, supercritical_params):
        """Test that B(theta) is the transform of a real field"""
        B = nonlinear_term(random_field(small_grid, seed=21), supercritical_params, PSEUDOSPECTRAL)

        assert B.hermitian_defect() == 0.0


class TestRhs:
    """Test cases for the full right-hand side"""

    def test_constant_field_is_steady(self, subcritical_params):
        """Test that rhs vanishes on a constant"""
        grid = Grid(N=4)
        coeffs = np.zeros((grid.size, grid.size), dtype=np.complex128)
        coeffs[grid.N, grid.N] = 3.0
        theta = random_field(grid, seed=0).with_coeffs(coeffs)

        assert np.max(np.abs(rhs(theta, subcritical_params, PSEUDOSPECTRAL).coeffs)) == 0.0

    def test_unit_mode_decays(self):
        """Test rhs = -theta for a single |k| = 1 mode at nu = 1"""
        grid = Grid(N=4)
        theta = cosine_field(grid, [(1, 0, 1.0)])

        out = rhs(theta, ModelParams(alpha=0.6, beta=0.7, nu=1.0), PSEUDOSPECTRAL)

        np.testing.assert_allclose(out.coeffs, -theta.coeffs, atol=1e-15)

    def test_damping_symbol(self, small_grid, subcritical_params):
        """Test rhs - B = -nu |k|^(2 alpha) theta"""
        theta = random_field(small_grid, seed=13)

        out = rhs(theta, subcritical_params, PSEUDOSPECTRAL)
        B = nonlinear_term(theta, subcritical_params, PSEUDOSPECTRAL)

        expected = -subcritical_params.nu * symbol_power(small_grid.N, 1.5) * theta.coeffs
        np.testing.assert_allclose(out.coeffs - B.coeffs, expected, atol=1e-13)


class TestTripleSum:
    """Test cases for the symmetrized triple sum"""

    def test_perp_identity_on_integer_triples(self):
        """Test <m, k_perp> = <k, l_perp> = <l, m_perp> whenever l + m + k = 0"""
        rng = np.random.default_rng(2024)
        l = rng.integers(-1000, 1001, size=(1000, 2))
        m = rng.integers(-1000, 1001, size=(1000, 2))
        k = -(l + m)

        lm = perp_pairing(l[:, 0], l[:, 1], m[:, 0], m[:, 1])
        mk = perp_pairing(m[:, 0], m[:, 1], k[:, 0], k[:, 1])
        kl = perp_pairing(k[:, 0], k[:, 1], l[:, 0], l[:, 1])

        np.testing.assert_array_equal(mk, lm)
        np.testing.assert_array_equal(kl, lm)

    def test_zero_order_vanishes(self, small_grid, subcritical_params):
        """Test S = 0 at s = 0"""
        theta = random_field(small_grid, seed=1)
        norm = float(np.sqrt(np.sum(np.abs(theta.coeffs) ** 2)))

        assert abs(triple_sum_S(theta, 0.0, subcritical_params)) <= 1e-12 * norm ** 3

    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
    def test_matches_weighted_pairing(self, small_grid, supercritical_params, s):
        """Test S = -2 Re sum |k|^2s conj(theta) B"""
        theta = random_field(small_grid, seed=17, decay=2.0)

        direct = triple_sum_S(theta, s, supercritical_params)
        paired = pairing_S(theta, s, supercritical_params, DIRECT)

        assert direct == pytest.approx(paired, rel=1e-10, abs=1e-13)

    def test_symmetrized_bound(self):
        """Test |S| <= 6 K* ||theta||_s^2 sum |l|^(2-2b) |theta(l)| with K* the lattice maximum"""
        grid = Grid(N=4)
        params = ModelParams(alpha=0.2, beta=0.6)
        s = 1.0
        b = params.beta
        N = grid.N
        modes = [(i, j) for i in range(-N, N + 1) for j in range(-N, N + 1) if (i, j) != (0, 0)]

        def norm(v):
            return float(np.hypot(*v))

        def kernel(l, m, k):
            return perp_pairing(l[0], l[1], m[0], m[1]) * (norm(m) ** (-2 * b) - norm(l) ** (-2 * b)) * norm(k) ** (2 * s)

        worst = 0.0
        for l in modes:
            for m in modes:
                k = (-l[0] - m[0], -l[1] - m[1])
                if k == (0, 0) or max(abs(k[0]), abs(k[1])) > N:
                    continue
                triple = (l, m, k)
                symmetric = sum(kernel(*perm) for perm in itertools.permutations(triple)) / 6.0
                a, mid, c = sorted(triple, key=norm)
                worst = max(worst, abs(symmetric) / (norm(a) ** (2 - 2 * b) * norm(mid) ** s * norm(c) ** s))

        for seed in range(5):
            theta = random_field(grid, seed=seed)
            energy = float(np.sum(symbol_power(N, 2 * s) * np.abs(theta.coeffs) ** 2))
            weighted = float(np.sum(symbol_power(N, 2 - 2 * b) * np.abs(theta.coeffs)))

            assert abs(triple_sum_S(theta, s, params)) <= 6.0 * worst * energy * weighted * (1 + 1e-12)
