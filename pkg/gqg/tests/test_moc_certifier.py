import math
from decimal import Decimal, localcontext

import numpy as np
import pytest

from gqg import __version__
from gqg.models import ConstantsUsed, Grid, Moc, MocRegime, ModelParams, PhysicalField, SpectralField
from gqg.services.diagnostics import linf_and_grad
from gqg.services.moc_certifier import (
    certify,
    convection_bound,
    dissipation_bound,
    dissipation_closed_bound,
    fit_scaling,
    omega,
    omega_derivative,
    rescale_for_data,
    search_certificate,
    search_parameters,
    smallness_check,
    smallness_constant,
    taylor_constant,
    verify_field_moc,
)
from gqg.services.spectral_core import to_physical
from gqg.tests.fields import cosine_field
from gqg.utils import (
    CertificationSearchError,
    MocDomainError,
    MocInvariantError,
    RegimeMismatchError,
)


@pytest.fixture
def subcritical_moc():
    """Largest admissible gamma at delta = 1/4 for alpha + beta = 3/2"""
    return Moc(regime=MocRegime.SUBCRITICAL, r=1.5, tail_exponent=2.0, delta=0.25, gamma=2.0 ** -7, alpha_beta=1.5)


@pytest.fixture
def supercritical_moc():
    """alpha + beta = 0.8, tail exponent 0.9"""
    return Moc(regime=MocRegime.SUPERCRITICAL, r=1.2, tail_exponent=0.9, delta=2.0 ** -6, gamma=2.0 ** -5,
               alpha_beta=0.8)


class TestOmega:
    """Test cases for evaluating the modulus of continuity"""

    def test_profile_values(self, subcritical_moc):
        """Test the head formula and the origin"""
        assert omega(subcritical_moc, 0.0) == 0.0
        assert omega(subcritical_moc, 0.16) == pytest.approx(0.16 - 0.16 ** 1.5)
        assert isinstance(omega(subcritical_moc, 0.1), float)

    @pytest.mark.parametrize("name", ["subcritical_moc", "supercritical_moc"])
    def test_continuous_increasing_concave(self, name, request):
        """Test continuity at delta, monotonicity and concavity on a log grid"""
        moc = request.getfixturevalue(name)
        xi = np.geomspace(1e-6 * moc.delta, 1e3 * moc.delta, 4001)

        values = omega(moc, xi)
        slopes = np.diff(values) / np.diff(xi)

        assert omega(moc, moc.delta * (1 + 1e-12)) == pytest.approx(omega(moc, moc.delta), rel=1e-10)
        assert np.all(np.diff(values) > 0)
        assert np.all(np.diff(slopes) <= 1e-12 * np.max(slopes))

    @pytest.mark.parametrize("name", ["subcritical_moc", "supercritical_moc"])
    def test_derivative_drops_at_delta(self, name, request):
        """Test omega'(delta+) < omega'(delta-)"""
        moc = request.getfixturevalue(name)

        left = omega_derivative(moc, moc.delta)
        right = omega_derivative(moc, moc.delta * (1 + 1e-12))

        assert right < left
        assert left == pytest.approx(moc.head_slope_at_delta)
        assert right == pytest.approx(moc.tail_slope_at_delta, rel=1e-9)

    def test_scaling(self, supercritical_moc):
        """Test omega_lam(xi) = lam^(2(a+b-1)) omega(lam xi)"""
        lam = 3.7
        xi = np.array([1e-4, 0.01, 0.5, 2.0])

        scaled = omega(supercritical_moc.scaled(lam), xi)

        np.testing.assert_allclose(scaled, lam ** (2 * (0.8 - 1)) * omega(supercritical_moc, lam * xi), rtol=1e-14)

    def test_negative_distance(self, subcritical_moc):
        """Test that xi < 0 is outside the domain"""
        with pytest.raises(MocDomainError):
            omega(subcritical_moc, -1e-3)
        with pytest.raises(MocDomainError):
            omega_derivative(subcritical_moc, np.array([0.1, -0.1]))

    def test_lambda_alias(self, subcritical_moc):
        """Test that the scaling serialises as lambda"""
        data = subcritical_moc.scaled(2.0).model_dump(by_alias=True)

        assert data["lambda"] == 2.0
        assert Moc.model_validate(data).lam == 2.0


class TestInvariants:
    """Test cases for the family constraints"""

    def test_admissible(self, subcritical_moc, supercritical_moc):
        """Test that the fixtures satisfy every constraint"""
        assert subcritical_moc.violations(alpha=0.75) == []
        assert supercritical_moc.violations(alpha=0.2) == []

    def test_gamma_too_large(self, subcritical_moc):
        """Test that a tail slope above the head slope is a violation"""
        moc = subcritical_moc.model_copy(update={"gamma": 2.0 ** -6})

        assert any("derivative drop" in v for v in moc.violations())

    def test_head_not_increasing(self, subcritical_moc):
        """Test that delta = 1/2 is too large for r = 3/2"""
        moc = subcritical_moc.model_copy(update={"delta": 0.5})

        assert any("not increasing" in v for v in moc.violations())

    def test_supercritical_caps(self, supercritical_moc):
        """Test the gamma, delta and r limits of the supercritical family"""
        assert supercritical_moc.model_copy(update={"gamma": 0.1}).violations()
        assert supercritical_moc.model_copy(update={"delta": 0.25}).violations()
        assert supercritical_moc.model_copy(update={"r": 1.5}).violations(alpha=0.2)
        assert supercritical_moc.model_copy(update={"tail_exponent": 0.7}).violations()

    def test_certify_refuses_invalid(self, subcritical_moc, subcritical_params):
        """Test that certification of an inadmissible modulus raises with the violations"""
        moc = subcritical_moc.model_copy(update={"gamma": 1.0})

        with pytest.raises(MocInvariantError) as excinfo:
            certify(moc, subcritical_params, points=4)

        assert excinfo.value.violations

    def test_regime_mismatch(self, subcritical_moc, supercritical_params):
        """Test that a modulus must match the parameter regime"""
        with pytest.raises(RegimeMismatchError):
            certify(subcritical_moc, supercritical_params, points=4)
        with pytest.raises(RegimeMismatchError):
            certify(subcritical_moc, ModelParams(alpha=0.7, beta=0.7), points=4)


class TestBounds:
    """Test cases for the pointwise convection and dissipation bounds"""

    def test_taylor_constant(self):
        """Test r(r-1) 2^(2a-1) / (2-2a)"""
        assert taylor_constant(1.5, 0.75) == pytest.approx(1.5 * 0.5 * math.sqrt(2.0) / 0.5)

    def test_closed_bound_near_origin(self, subcritical_moc, subcritical_params):
        """Test -C2 kappa xi^(r - 2 alpha) below delta"""
        xi = 0.01

        bound = dissipation_closed_bound(subcritical_moc, xi, subcritical_params, C2=2.0)

        assert bound == pytest.approx(-2.0 * taylor_constant(1.5, 0.75) * xi ** 0.0)

    def test_dissipation_bound_is_the_weaker(self, supercritical_moc, supercritical_params):
        """Test that the reported bound is at least the closed one"""
        for xi in (1e-4, supercritical_moc.delta, 10 * supercritical_moc.delta):
            closed = dissipation_closed_bound(supercritical_moc, xi, supercritical_params, 1.0)
            bound = dissipation_bound(supercritical_moc, xi, supercritical_params, 1.0)

            assert bound.value >= closed
            assert bound.value < 0

    def test_convection_positive_and_linear_in_C1(self, subcritical_moc, subcritical_params):
        """Test that the convection bound is positive and scales with C1"""
        one = convection_bound(subcritical_moc, 0.1, subcritical_params, 1.0)
        three = convection_bound(subcritical_moc, 0.1, subcritical_params, 3.0)

        assert one.value > 0
        assert three.value == pytest.approx(3.0 * one.value, rel=1e-14)

    def test_bounds_need_positive_xi(self, subcritical_moc, subcritical_params):
        """Test that the bounds are defined for xi > 0 only"""
        with pytest.raises(MocDomainError):
            convection_bound(subcritical_moc, 0.0, subcritical_params, 1.0)
        with pytest.raises(MocDomainError):
            dissipation_bound(subcritical_moc, -1.0, subcritical_params, 1.0)


class TestCertify:
    """Test cases for grid certification"""

    def test_subcritical_certificate(self, subcritical_moc, subcritical_params):
        """Test a certified report and its bookkeeping"""
        report = certify(subcritical_moc, subcritical_params, points=32)

        assert report.certified and report.complete
        assert len(report.xi_grid) == 32
        assert report.xi_grid[0] == pytest.approx(1e-6 * 0.25)
        assert report.xi_grid[-1] == pytest.approx(1e3 * 0.25)
        assert all(m + e < 0 for m, e in zip(report.margins, report.errors))
        assert report.notes[0].startswith("grid-based")
        assert report.code_version == __version__
        assert set(report.constraint_checks) == {
            "derivative_drop_slack", "doubling_ratio_max", "gamma_cap_slack", "tail_weight_min_slack",
        }
        assert report.constraint_checks["derivative_drop_slack"] > 0
        assert report.constants_used.provenance == "configuration default"

    def test_explicit_range_and_constants(self, subcritical_moc, subcritical_params):
        """Test that an explicit xi range and constants are honoured"""
        constants = ConstantsUsed(C1=2.0, C2=0.5, provenance="test")

        report = certify(subcritical_moc, subcritical_params, constants=constants, xi_range=(0.01, 1.0), points=4)

        assert report.xi_grid == pytest.approx([0.01, 0.01 ** (2 / 3), 0.01 ** (1 / 3), 1.0])
        assert report.constants_used == constants

    def test_bad_grid(self, subcritical_moc, subcritical_params):
        """Test that degenerate grids are refused"""
        with pytest.raises(ValueError):
            certify(subcritical_moc, subcritical_params, points=1)
        with pytest.raises(ValueError):
            certify(subcritical_moc, subcritical_params, xi_range=(1.0, 0.5), points=4)

    def test_fail_fast_stops_early(self, supercritical_moc, supercritical_params):
        """Test that the first failing point ends an incomplete evaluation"""
        report = certify(supercritical_moc, supercritical_params, points=24, fail_fast=True)

        assert not report.certified
        assert not report.complete
        assert report.margins[-1] + report.errors[-1] >= 0
        assert all(m + e < 0 for m, e in zip(report.margins[:-1], report.errors[:-1]))

    def test_scaled_modulus(self, subcritical_moc, subcritical_params):
        """Test that the default range follows delta / lam"""
        report = certify(subcritical_moc.scaled(4.0), subcritical_params, points=8)

        assert report.xi_grid[0] == pytest.approx(1e-6 * 0.25 / 4.0)
        assert report.certified


class TestSearch:
    """Test cases for the (delta, gamma) sweep"""

    def test_empty_budget(self, subcritical_params):
        """Test that no halvings leaves only the inadmissible (1, 1) pair"""
        with pytest.raises(CertificationSearchError) as excinfo:
            search_certificate(subcritical_params, r=1.5, max_halvings=0)

        assert excinfo.value.visited == 1
        assert excinfo.value.best_margin is None
        assert excinfo.value.best_candidate is None
        [only] = excinfo.value.candidates
        assert (only["delta"], only["gamma"]) == (1.0, 1.0)
        assert only["head_slope_at_delta"] == pytest.approx(-0.5)
        assert only["derivative_drop"] == pytest.approx(-1.5)
        assert any("not increasing" in v for v in only["violations"])

    def test_supercritical_needs_tail(self, supercritical_params):
        """Test that a supercritical sweep requires a tail exponent"""
        with pytest.raises(RegimeMismatchError):
            search_certificate(supercritical_params, r=1.2)

    def test_critical_rejected(self):
        """Test that alpha + beta = 1 has no explicit modulus"""
        with pytest.raises(RegimeMismatchError):
            search_certificate(ModelParams(alpha=0.4, beta=0.6), r=1.5)

    @pytest.mark.slow
    @pytest.mark.timeout(300)
    def test_subcritical_search(self, subcritical_params):
        """Test that the sweep certifies delta = 1/4 with the largest admissible gamma"""
        report = search_certificate(subcritical_params, r=1.5, points=64)

        assert report.certified
        assert report.moc.delta == 0.25
        assert report.moc.gamma == 2.0 ** -7

    @pytest.mark.slow
    @pytest.mark.timeout(300)
    def test_supercritical_search(self, supercritical_params):
        """Test that a supercritical modulus is certified within the default budget"""
        moc = search_parameters(supercritical_params, r=1.2, tail_exponent=0.9, points=64)

        report = certify(moc, supercritical_params, points=64)
        assert report.certified
        assert moc.delta <= 2.0 ** -5
        assert moc.violations(alpha=0.2) == []


class TestModulusProperties:
    """Test cases for the structural properties the bounds rely on"""

    def test_subcritical_tail_weight(self, subcritical_moc, subcritical_params):
        """Test 2^(1 - 2(a+b)) gamma <= omega(xi) xi^(2(a+b)) beyond delta"""
        ab = subcritical_moc.alpha_beta
        xs = np.geomspace(1.01 * subcritical_moc.delta, 1e3 * subcritical_moc.delta, 200)

        weighted = omega(subcritical_moc, xs) * xs ** (2.0 * ab)

        assert np.all(weighted >= 2.0 ** (1.0 - 2.0 * ab) * subcritical_moc.gamma)
        report = certify(subcritical_moc, subcritical_params, points=2)
        assert report.constraint_checks["tail_weight_min_slack"] >= 0

    def test_supercritical_tail_lower_bound(self, supercritical_moc, supercritical_params):
        """Test omega(xi) >= gamma xi^(1-t) delta^t / (1-t) beyond delta"""
        m = supercritical_moc
        xs = np.geomspace(1.01 * m.delta, 1e3 * m.delta, 200)

        lower = m.gamma * xs ** (1.0 - m.tail_exponent) * m.delta ** m.tail_exponent / (1.0 - m.tail_exponent)

        assert np.all(omega(m, xs) >= lower)
        report = certify(m, supercritical_params, points=2)
        assert report.constraint_checks["tail_lower_bound_min_slack"] > 0

    def test_subcritical_doubling(self, subcritical_moc, subcritical_params):
        """Test omega(2 xi) <= 3/2 omega(xi) beyond delta"""
        xs = np.geomspace(1.01 * subcritical_moc.delta, 1e3 * subcritical_moc.delta, 200)

        ratio = omega(subcritical_moc, 2.0 * xs) / omega(subcritical_moc, xs)

        assert np.all(ratio <= 1.5)
        assert certify(subcritical_moc, subcritical_params, points=2).constraint_checks["doubling_ratio_max"] <= 1.5

    def test_halving_gamma_keeps_certificate(self, subcritical_moc, subcritical_params):
        """Test that a certified (delta, gamma) stays certified with gamma / 2"""
        halved = subcritical_moc.model_copy(update={"gamma": subcritical_moc.gamma / 2.0})

        assert certify(subcritical_moc, subcritical_params, points=32).certified
        assert halved.violations(alpha=subcritical_params.alpha) == []
        assert certify(halved, subcritical_params, points=32).certified

    def test_subcritical_convection_closed_form(self, subcritical_moc, subcritical_params):
        """Test the quadrature convection bound against the closed form below delta"""
        a, b = subcritical_params.alpha, subcritical_params.beta
        d = subcritical_moc.delta
        linear = d ** (2 * b - 1) / (2 * b - 1) + d ** (2 * b - 1) / (2 - 2 * b) + d ** (1 - 2 * a) / ((2 - 2 * b) * 2 * a)

        for xi in (1e-4, 1e-2, 0.1, d):
            bound = convection_bound(subcritical_moc, xi, subcritical_params, 1.0)

            assert bound.value + bound.error <= xi ** (2 * b) / (2 * b) + xi * linear

    def test_modulus_caps_gradient(self, subcritical_moc):
        """Test that a field with the modulus has slope at most omega'(0) up to grid slack"""
        grid = Grid(N=32)
        amplitude, k = 10.0, 3
        theta0 = cosine_field(grid, [(k, 0, amplitude)])

        scaled, result = fit_scaling(theta0, subcritical_moc)
        _, grad_sup = linf_and_grad(theta0)

        assert result.holds
        assert grad_sup == pytest.approx(amplitude * k, rel=1e-2)
        h = 2.0 * np.pi / grid.M
        assert grad_sup <= omega_derivative(scaled, 0.0) + h * amplitude * k * k


class TestSmallness:
    """Test cases for the supercritical smallness condition"""

    def test_constant_against_decimal(self, supercritical_params):
        """Test c = (delta - delta^r)^(2(a+b) - 1) / 2 in high precision"""
        moc = Moc(regime=MocRegime.SUPERCRITICAL, r=1.2, tail_exponent=0.9, delta=0.25, gamma=0.01, alpha_beta=0.8)
        with localcontext() as ctx:
            ctx.prec = 40
            delta = Decimal("0.25")
            expected = (delta - delta ** Decimal("1.2")) ** Decimal("0.6") / 2

        value = smallness_constant(moc, supercritical_params)

        assert value == pytest.approx(float(expected), rel=1e-13)
        assert value == pytest.approx(0.0929343, abs=1e-7)

    def test_searched_constant_frozen(self, supercritical_params):
        """Test c for the modulus the default supercritical sweep certifies"""
        moc = Moc(regime=MocRegime.SUPERCRITICAL, r=1.2, tail_exponent=0.9, delta=2.0 ** -10, gamma=2.0 ** -5,
                  alpha_beta=0.8)

        assert moc.violations(alpha=0.2) == []
        assert smallness_constant(moc, supercritical_params) == pytest.approx(0.0065739, rel=1e-4)

    def test_constant_needs_supercritical(self, subcritical_moc, subcritical_params):
        """Test that the constant is undefined for alpha + beta > 1"""
        with pytest.raises(RegimeMismatchError):
            smallness_constant(subcritical_moc, subcritical_params)

    def test_rescale(self, supercritical_moc):
        """Test lam^(2(a+b) - 1) = 2 ||grad theta0||_inf"""
        assert rescale_for_data(supercritical_moc, 0.5).lam == pytest.approx(1.0)
        assert rescale_for_data(supercritical_moc, 2.0).lam == pytest.approx(4.0 ** (1 / 0.6))
        with pytest.raises(ValueError):
            rescale_for_data(supercritical_moc, 0.0)

    def test_zero_field(self, supercritical_moc, supercritical_params):
        """Test that zero data satisfies the condition trivially"""
        result = smallness_check(SpectralField.zeros(Grid(N=4)), supercritical_moc, supercritical_params)

        assert result.satisfied
        assert result.lhs == 0.0
        assert result.moc_verified is None

    def test_cosine_lhs(self, supercritical_moc, supercritical_params):
        """Test lhs = A for A cos x1 and the modulus check when small"""
        amplitude = 0.01
        theta = cosine_field(Grid(N=8), [(1, 0, amplitude)])

        result = smallness_check(theta, supercritical_moc, supercritical_params)

        assert result.lhs == pytest.approx(amplitude, rel=1e-12)
        assert result.satisfied
        assert result.moc_verified
        assert result.findings == []

    def test_physical_input(self, supercritical_moc, supercritical_params):
        """Test that grid values give the same answer as their coefficients"""
        theta = cosine_field(Grid(N=8), [(1, 0, 0.01), (0, 2, 0.005)])

        spectral = smallness_check(theta, supercritical_moc, supercritical_params)
        physical = smallness_check(to_physical(theta), supercritical_moc, supercritical_params)

        assert physical.lhs == pytest.approx(spectral.lhs, rel=1e-12)
        assert physical.satisfied == spectral.satisfied

    def test_large_data_not_small(self, supercritical_moc, supercritical_params):
        """Test that unit-amplitude data violates the condition"""
        result = smallness_check(cosine_field(Grid(N=8), [(1, 0, 1.0)]), supercritical_moc, supercritical_params)

        assert not result.satisfied
        assert result.lhs == pytest.approx(1.0, rel=1e-12)
        assert result.moc_verified is None


class TestFieldVerification:
    """Test cases for checking fields against a modulus"""

    def test_constant_field(self, subcritical_moc):
        """Test that a constant has ratio 0 and no worst pair"""
        grid = Grid(N=4)

        result = verify_field_moc(PhysicalField(grid=grid, values=np.full((grid.M, grid.M), 2.5)), subcritical_moc)

        assert result.holds
        assert result.worst_ratio == 0.0
        assert result.worst_pair is None
        assert result.pairs_checked > 0

    def test_small_cosine_holds(self, subcritical_moc):
        """Test that a gentle field has the modulus"""
        theta = to_physical(cosine_field(Grid(N=8), [(1, 0, 1e-3)]))

        result = verify_field_moc(theta, subcritical_moc)

        assert result.holds
        assert 0 < result.worst_ratio < 0.1

    def test_steep_field_fails(self, subcritical_moc):
        """Test that a steep field violates the modulus at a reported pair"""
        theta = to_physical(cosine_field(Grid(N=8), [(3, 0, 10.0)]))

        result = verify_field_moc(theta, subcritical_moc)

        assert not result.holds
        assert result.worst_ratio > 1.0
        assert result.worst_pair is not None
        assert result.worst_distance > 0

    def test_seeded_far_pairs(self, subcritical_moc):
        """Test that the far-pair sample is reproducible"""
        theta = to_physical(cosine_field(Grid(N=8), [(2, 1, 1.0)]))

        first = verify_field_moc(theta, subcritical_moc, near_cells=1, far_pairs=500, seed=4)
        second = verify_field_moc(theta, subcritical_moc, near_cells=1, far_pairs=500, seed=4)

        assert first == second

    def test_fit_scaling(self, subcritical_moc):
        """Test that doubling lam eventually covers any smooth field"""
        theta0 = cosine_field(Grid(N=8), [(3, 0, 10.0)])

        scaled, result = fit_scaling(theta0, subcritical_moc)

        assert result.holds
        assert verify_field_moc(to_physical(theta0), scaled).holds
