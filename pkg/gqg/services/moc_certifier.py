import math
from functools import lru_cache
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import special

from .. import __version__
from ..models import (
    BoundEstimate,
    CertificateReport,
    ConstantsUsed,
    Moc,
    MocRegime,
    ModelParams,
    PhysicalField,
    Regime,
    SmallnessResult,
    SpectralField,
    VerificationResult,
)
from ..utils import (
    CertificationSearchError,
    Config,
    DivergentIntegralError,
    MocDomainError,
    MocInvariantError,
    RegimeMismatchError,
    get_logger,
)
from .diagnostics import linf_and_grad
from .quadrature import adaptive_integral
from .spectral_core import to_physical, to_spectral

logger = get_logger(__name__)

# Below this relative step the second difference is summed as a binomial series.
SERIES_CUTOFF = 1e-2
SERIES_TERMS = 6
SCREEN_POINTS = 24
CHECK_POINTS = 256
MAX_SCALING_DOUBLINGS = 40


class _Profile(NamedTuple):
    """Unscaled profile: xi - xi^r on [0, delta], A + B xi^(1-t) beyond"""

    r: float
    t: float
    delta: float
    g: float
    A: float
    B: float


def _profile(moc: Moc) -> _Profile:
    t = moc.tail_exponent
    g = moc.tail_coefficient
    at_delta = moc.delta - moc.delta ** moc.r
    B = g / (1.0 - t)
    A = at_delta - B * moc.delta ** (1.0 - t)
    return _Profile(r=moc.r, t=t, delta=moc.delta, g=g, A=A, B=B)


def _value(p: _Profile, x: float) -> float:
    if x <= p.delta:
        return x - math.pow(x, p.r)
    return p.A + p.B * math.pow(x, 1.0 - p.t)


def _slope(p: _Profile, x: float) -> float:
    if x <= p.delta:
        return 1.0 - p.r * math.pow(x, p.r - 1.0) if x > 0 else 1.0
    return p.g * math.pow(x, -p.t)


def _scale_exponent(moc: Moc) -> float:
    return 2.0 * (moc.alpha_beta - 1.0)


def _bound_scale(moc: Moc, params: ModelParams) -> float:
    """Factor lam^(4 alpha + 2 beta - 2) carrying bounds of the unscaled profile to omega_lam"""
    return moc.lam ** (4.0 * params.alpha + 2.0 * params.beta - 2.0)


def omega(moc: Moc, xi: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """omega_lam(xi) = lam^(2(alpha+beta-1)) omega(lam xi); vectorised over xi"""
    x = np.asarray(xi, dtype=np.float64)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise MocDomainError("modulus of continuity is defined for xi >= 0 only")
    p = _profile(moc)
    y = moc.lam * x
    head = y - y ** p.r
    tail = p.A + p.B * np.maximum(y, p.delta) ** (1.0 - p.t)
    value = moc.lam ** _scale_exponent(moc) * np.where(y <= p.delta, head, tail)
    return float(value) if value.ndim == 0 else value


def omega_derivative(moc: Moc, xi: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """omega_lam'(xi); at delta the left derivative"""
    x = np.asarray(xi, dtype=np.float64)
    if np.any(x < 0):
        raise MocDomainError("modulus of continuity is defined for xi >= 0 only")
    p = _profile(moc)
    y = moc.lam * x
    head = 1.0 - p.r * y ** (p.r - 1.0)
    tail = p.g * np.maximum(y, p.delta) ** (-p.t)
    value = moc.lam ** (_scale_exponent(moc) + 1.0) * np.where(y <= p.delta, head, tail)
    return float(value) if value.ndim == 0 else value


def head_integral(profile: Callable[[float], float], x: float, beta: float) -> BoundEstimate:
    """int_0^x profile(eta) eta^(2 beta - 2) d eta for an arbitrary profile"""
    return adaptive_integral(profile, 0.0, x, origin_power=2.0 * beta - 2.0)


def convection_integrals(moc: Moc, x: float, beta: float) -> Tuple[BoundEstimate, BoundEstimate]:
    """Head and tail integrals of the unscaled profile at x.

    head = int_0^x omega(eta) eta^(2b-2), closed on [0, min(x, delta)] and adaptive beyond;
    tail = int_x^inf omega(eta) eta^(2b-3), adaptive up to a cutoff and closed past it.
    """
    p = _profile(moc)
    if p.t <= 2.0 * beta - 1.0:
        raise DivergentIntegralError(
            f"tail integral diverges: tail exponent {p.t} must exceed 2 beta - 1 = {2.0 * beta - 1.0}"
        )

    a = min(x, p.delta)
    closed = a ** (2.0 * beta) / (2.0 * beta) - a ** (p.r + 2.0 * beta - 1.0) / (p.r + 2.0 * beta - 1.0)
    rest = adaptive_integral(lambda eta: _value(p, eta) * eta ** (2.0 * beta - 2.0), p.delta, x)
    head = BoundEstimate(closed + rest.value, rest.error)

    cutoff = Config.TAIL_CUTOFF_FACTOR * max(x, p.delta)
    near = adaptive_integral(lambda eta: _value(p, eta) * eta ** (2.0 * beta - 3.0), x, cutoff, points=[p.delta])
    far = (p.A * cutoff ** (2.0 * beta - 2.0) / (2.0 - 2.0 * beta)
           + p.B * cutoff ** (2.0 * beta - 1.0 - p.t) / (p.t + 1.0 - 2.0 * beta))
    return head, BoundEstimate(near.value + far, near.error)


def convection_bound(moc: Moc, xi: float, params: ModelParams, C1: float) -> BoundEstimate:
    """Omega(xi) omega'(xi) with Omega(xi) = C1 (head(xi) + xi tail(xi))"""
    if xi <= 0:
        raise MocDomainError(f"convection bound needs xi > 0, got {xi}")
    y = moc.lam * xi
    head, tail = convection_integrals(moc, y, params.beta)
    slope = _slope(_profile(moc), y)
    scale = C1 * slope * _bound_scale(moc, params)
    return BoundEstimate((head.value + y * tail.value) * scale, (head.error + y * tail.error) * scale)


def taylor_constant(r: float, alpha: float) -> float:
    return r * (r - 1.0) * 2.0 ** (2.0 * alpha - 1.0) / (2.0 - 2.0 * alpha)


def dissipation_closed_bound(moc: Moc, xi: float, params: ModelParams, C2: float) -> float:
    """Closed upper bound on the dissipation term.

    Near side: -C2 kappa xi^(r - 2 alpha). Far side: C2 (omega(2 xi) - 2 omega(xi)) 2^(2 alpha) xi^(-2 alpha) / (2 alpha).
    """
    if xi <= 0:
        raise MocDomainError(f"dissipation bound needs xi > 0, got {xi}")
    p = _profile(moc)
    alpha = params.alpha
    y = moc.lam * xi
    if y <= p.delta:
        base = -taylor_constant(p.r, alpha) * y ** (p.r - 2.0 * alpha)
    else:
        base = (_value(p, 2.0 * y) - 2.0 * _value(p, y)) * 2.0 ** (2.0 * alpha) * y ** (-2.0 * alpha) / (2.0 * alpha)
    return C2 * base * _bound_scale(moc, params)


@lru_cache(maxsize=64)
def _series_coefficients(power: float) -> Tuple[float, ...]:
    return tuple(float(2.0 * special.binom(power, 2 * j)) for j in range(1, SERIES_TERMS + 1))


def _second_difference_ratio(p: _Profile, y: float, eta: float) -> float:
    """(omega(y + 2 eta) + omega(y - 2 eta) - 2 omega(y)) / eta^2 without cancellation near eta = 0"""
    if y + 2.0 * eta <= p.delta:
        coeff, power = -math.pow(y, p.r), p.r
    elif y - 2.0 * eta >= p.delta:
        coeff, power = p.B * math.pow(y, 1.0 - p.t), 1.0 - p.t
    else:
        return (_value(p, y + 2.0 * eta) + _value(p, y - 2.0 * eta) - 2.0 * _value(p, y)) / (eta * eta)

    u = 2.0 * eta / y
    if u < SERIES_CUTOFF:
        u2 = u * u
        total, term = 0.0, 1.0
        for c in _series_coefficients(power):
            total += c * term
            term *= u2
        return coeff * total * 4.0 / (y * y)
    return coeff * (math.pow(1.0 + u, power) + math.pow(1.0 - u, power) - 2.0) / (eta * eta)


def dissipation_integrals(moc: Moc, y: float, alpha: float) -> Tuple[BoundEstimate, BoundEstimate]:
    """The two defining dissipation integrals of the unscaled profile at y.

    near = int_0^{y/2} (omega(y + 2 eta) + omega(y - 2 eta) - 2 omega(y)) / eta^(1 + 2 alpha)
    far  = int_{y/2}^inf (omega(2 eta + y) - omega(2 eta - y) - 2 omega(y)) / eta^(1 + 2 alpha)
    """
    p = _profile(moc)
    half = 0.5 * y
    split = 0.5 * abs(y - p.delta)
    inner_end = split if 0.0 < split < half else half

    inner = adaptive_integral(lambda eta: _second_difference_ratio(p, y, eta), 0.0, inner_end,
                              origin_power=1.0 - 2.0 * alpha)
    outer = adaptive_integral(lambda eta: _second_difference_ratio(p, y, eta) * eta ** (1.0 - 2.0 * alpha),
                              inner_end, half)
    near = BoundEstimate(inner.value + outer.value, inner.error + outer.error)

    at_y = _value(p, y)

    def far_integrand(eta: float) -> float:
        return (_value(p, 2.0 * eta + y) - _value(p, 2.0 * eta - y) - 2.0 * at_y) / eta ** (1.0 + 2.0 * alpha)

    knee = 0.5 * (p.delta + y)
    finite = adaptive_integral(far_integrand, half, knee, points=[0.5 * (p.delta - y)])
    tail = adaptive_integral(far_integrand, max(half, knee), math.inf)
    far = BoundEstimate(finite.value + tail.value, finite.error + tail.error)
    return near, far


def dissipation_bound(moc: Moc, xi: float, params: ModelParams, C2: float) -> BoundEstimate:
    """The weaker of the closed bound and the direct quadrature, with the quadrature error when it wins"""
    closed = dissipation_closed_bound(moc, xi, params, C2)
    near, far = dissipation_integrals(moc, moc.lam * xi, params.alpha)
    scale = C2 * _bound_scale(moc, params)
    direct = (near.value + far.value) * scale
    if direct > closed:
        return BoundEstimate(direct, (near.error + far.error) * scale)
    return BoundEstimate(closed, 0.0)


def _check_regime(moc: Moc, params: ModelParams) -> None:
    expected = {Regime.SUBCRITICAL: MocRegime.SUBCRITICAL, Regime.SUPERCRITICAL: MocRegime.SUPERCRITICAL}
    if params.regime not in expected:
        raise RegimeMismatchError("no explicit modulus of continuity for alpha + beta = 1")
    if moc.regime != expected[params.regime]:
        raise RegimeMismatchError(f"{moc.regime.value} modulus used with {params.regime.value} parameters")
    if abs(moc.alpha_beta - params.alpha_beta) > 1e-12:
        raise RegimeMismatchError(
            f"modulus built for alpha + beta = {moc.alpha_beta}, parameters have {params.alpha_beta}"
        )


def _constraint_checks(moc: Moc) -> Tuple[dict, List[str]]:
    p = _profile(moc)
    ab = moc.alpha_beta
    ys = np.geomspace(p.delta, Config.CERT_XI_MAX_FACTOR * p.delta, CHECK_POINTS)[1:]
    values = np.array([_value(p, y) for y in ys])
    doubled = np.array([_value(p, 2.0 * y) for y in ys])

    checks = {
        "derivative_drop_slack": moc.head_slope_at_delta - moc.tail_slope_at_delta,
        "doubling_ratio_max": float(np.max(doubled / values)),
    }
    notes: List[str] = []
    if moc.regime == MocRegime.SUBCRITICAL:
        checks["gamma_cap_slack"] = 0.5 * p.delta ** p.t - moc.gamma
        checks["tail_weight_min_slack"] = float(np.min(values * ys ** (2.0 * ab)) - 2.0 ** (1.0 - 2.0 * ab) * moc.gamma)
        slacks = {k: checks[k] for k in ("derivative_drop_slack", "gamma_cap_slack", "tail_weight_min_slack")}
        if min(slacks, key=slacks.get) == "tail_weight_min_slack":
            notes.append("binding constraint: 2^(1-2(alpha+beta)) gamma <= omega(xi) xi^(2(alpha+beta)) for xi > delta")
    else:
        lower = moc.gamma * ys ** (1.0 - p.t) * p.delta ** p.t / (1.0 - p.t)
        checks["tail_lower_bound_min_slack"] = float(np.min(values - lower))
    return checks, notes


def certify(moc: Moc, params: ModelParams, constants: Optional[ConstantsUsed] = None,
            xi_range: Optional[Tuple[float, float]] = None, points: Optional[int] = None,
            fail_fast: bool = False, xi_factors: Optional[Tuple[float, float]] = None) -> CertificateReport:
    """Evaluate convection + dissipation upper bounds on a log-spaced xi grid.

    The default range is (min factor, max factor) * delta / lam, with the factors taken from
    ``xi_factors`` or the process configuration. ``certified`` holds iff every margin plus its
    quadrature error is negative. With
    ``fail_fast`` evaluation stops at the first non-negative point and the report is
    marked incomplete.
    """
    _check_regime(moc, params)
    violations = moc.violations(alpha=params.alpha)
    if violations:
        logger.warning("Refusing to certify invalid modulus", violations=violations)
        raise MocInvariantError(violations)

    constants = constants or ConstantsUsed(C1=Config.DEFAULT_C1, C2=Config.DEFAULT_C2)
    count = points or Config.CERT_POINTS
    if count < 2:
        raise ValueError(f"certification needs at least 2 points, got {count}")
    if xi_range is None:
        base = moc.delta / moc.lam
        low, high = xi_factors or (Config.CERT_XI_MIN_FACTOR, Config.CERT_XI_MAX_FACTOR)
        xi_range = (low * base, high * base)
    lo, hi = xi_range
    if not 0 < lo < hi:
        raise ValueError(f"certification range must satisfy 0 < lo < hi, got ({lo}, {hi})")

    grid = np.geomspace(lo, hi, count)
    xi_grid: List[float] = []
    convection: List[float] = []
    dissipation: List[float] = []
    margins: List[float] = []
    errors: List[float] = []
    complete = True

    for xi in grid:
        conv = convection_bound(moc, float(xi), params, constants.C1)
        diss = dissipation_bound(moc, float(xi), params, constants.C2)
        xi_grid.append(float(xi))
        convection.append(conv.value)
        dissipation.append(diss.value)
        margins.append(conv.value + diss.value)
        errors.append(conv.error + diss.error)
        if fail_fast and margins[-1] + errors[-1] >= 0:
            complete = False
            break

    certified = complete and all(m + e < 0 for m, e in zip(margins, errors))
    checks, notes = _constraint_checks(moc)
    notes.insert(0, f"grid-based: negativity checked at {len(xi_grid)} log-spaced points in [{lo:.6g}, {hi:.6g}],"
                    " not proven over the continuum")
    notes.append("as xi -> 0 the margin is governed by -C2 kappa xi^(r - 2 alpha); as xi -> inf both bounds scale"
                 " like omega(xi) xi^(-2 alpha)")

    report = CertificateReport(
        moc=moc,
        params=params,
        constants_used=constants,
        xi_grid=xi_grid,
        convection=convection,
        dissipation=dissipation,
        margins=margins,
        errors=errors,
        certified=certified,
        complete=complete,
        constraint_checks=checks,
        notes=notes,
        code_version=__version__,
    )
    logger.debug("Certification evaluated", regime=moc.regime.value, delta=moc.delta, gamma=moc.gamma,
                 points=len(xi_grid), certified=certified, worst_margin=report.worst_margin)
    return report


def _tail_exponent_for(params: ModelParams, tail_exponent: Optional[float]) -> Tuple[MocRegime, float]:
    if params.regime == Regime.SUBCRITICAL:
        return MocRegime.SUBCRITICAL, 2.0 * params.alpha_beta - 1.0
    if params.regime == Regime.SUPERCRITICAL:
        if tail_exponent is None:
            raise RegimeMismatchError("supercritical search needs a tail exponent in (alpha+beta, 1)")
        return MocRegime.SUPERCRITICAL, tail_exponent
    raise RegimeMismatchError("no explicit modulus of continuity for alpha + beta = 1")


def search_certificate(params: ModelParams, r: float, tail_exponent: Optional[float] = None,
                       constants: Optional[ConstantsUsed] = None, max_halvings: Optional[int] = None,
                       points: Optional[int] = None, xi_factors: Optional[Tuple[float, float]] = None) -> CertificateReport:
    """Sweep delta = 2^-i, gamma = 2^-j (0 <= i, j <= max_halvings) and certify the first admissible pair.

    Deltas are tried from the largest down and, for each delta, gammas from the largest down,
    so the result maximises delta first. Each candidate is screened on a coarse grid before the
    full certification; a coarse failure at xi <= delta moves on to the next delta.
    """
    regime, t = _tail_exponent_for(params, tail_exponent)
    halvings = Config.SEARCH_MAX_HALVINGS if max_halvings is None else max_halvings
    best_margin: Optional[float] = None
    best_candidate: Optional[dict] = None
    candidates: List[dict] = []
    visited = 0

    def remember(report: CertificateReport, screened: bool) -> None:
        nonlocal best_margin, best_candidate
        margin = report.worst_margin
        entry = {"delta": report.moc.delta, "gamma": report.moc.gamma, "worst_margin": margin,
                 "worst_xi": report.worst_xi, "screened": screened}
        candidates.append(entry)
        if best_margin is None or margin < best_margin:
            best_margin = margin
            best_candidate = {"delta": report.moc.delta, "gamma": report.moc.gamma, "worst_xi": report.worst_xi}

    for i in range(halvings + 1):
        delta = 0.5 ** i
        for j in range(halvings + 1):
            gamma = 0.5 ** j
            visited += 1
            moc = Moc(regime=regime, r=r, tail_exponent=t, delta=delta, gamma=gamma, alpha_beta=params.alpha_beta)
            violations = moc.violations(alpha=params.alpha)
            if violations:
                # Constraint slacks stand in for margins on candidates the bounds cannot judge
                candidates.append({
                    "delta": delta,
                    "gamma": gamma,
                    "violations": violations,
                    "head_slope_at_delta": moc.head_slope_at_delta,
                    "derivative_drop": moc.head_slope_at_delta - moc.tail_slope_at_delta,
                })
                continue

            screen = certify(moc, params, constants, points=SCREEN_POINTS, fail_fast=True, xi_factors=xi_factors)
            if not screen.certified:
                remember(screen, screened=True)
                if screen.worst_xi * moc.lam <= delta:
                    break
                continue

            report = certify(moc, params, constants, points=points, xi_factors=xi_factors)
            if report.certified:
                logger.info("Certified modulus found", regime=regime.value, delta=delta, gamma=gamma,
                            visited=visited, worst_margin=report.worst_margin)
                return report
            remember(report, screened=False)

    logger.warning("Certification search exhausted", visited=visited, best_margin=best_margin)
    detail = f"best worst-case margin {best_margin:.6g}" if best_margin is not None else "no admissible candidate"
    raise CertificationSearchError(
        f"no certified (delta, gamma) within {halvings} halvings ({visited} candidates, {detail})",
        best_margin=best_margin, best_candidate=best_candidate, visited=visited, candidates=candidates,
    )


def search_parameters(params: ModelParams, r: float, tail_exponent: Optional[float] = None,
                      constants: Optional[ConstantsUsed] = None, max_halvings: Optional[int] = None,
                      points: Optional[int] = None) -> Moc:
    return search_certificate(params, r, tail_exponent, constants, max_halvings, points).moc


def smallness_constant(moc: Moc, params: ModelParams) -> float:
    """c = (delta - delta^r)^(2(alpha+beta) - 1) / 2"""
    if params.regime != Regime.SUPERCRITICAL or moc.regime != MocRegime.SUPERCRITICAL:
        raise RegimeMismatchError("the smallness constant is defined for alpha + beta < 1 only")
    return 0.5 * (moc.delta - moc.delta ** moc.r) ** (2.0 * moc.alpha_beta - 1.0)


def rescale_for_data(moc: Moc, grad_sup: float) -> Moc:
    """Moc with lam^(2(alpha+beta) - 1) = 2 grad_sup"""
    if grad_sup <= 0:
        raise ValueError(f"gradient sup must be positive, got {grad_sup}")
    return moc.scaled((2.0 * grad_sup) ** (1.0 / (2.0 * moc.alpha_beta - 1.0)))


def _periodic_distance(di: np.ndarray, dj: np.ndarray, M: int) -> np.ndarray:
    ai, aj = np.abs(di) % M, np.abs(dj) % M
    ai = np.minimum(ai, M - ai)
    aj = np.minimum(aj, M - aj)
    return (2.0 * np.pi / M) * np.sqrt(ai * ai + aj * aj)


def verify_field_moc(theta: PhysicalField, moc: Moc, near_cells: Optional[int] = None,
                     far_pairs: Optional[int] = None, seed: int = 0) -> VerificationResult:
    """Check |theta(x) - theta(y)| <= omega_lam(d(x, y)) on grid pairs.

    All pairs within ``near_cells`` cells in each direction are checked, plus a seeded sample
    of arbitrary pairs. Distances are periodic on the torus.
    """
    values = theta.values
    M = theta.grid.M
    reach = min(Config.VERIFY_NEAR_CELLS if near_cells is None else near_cells, M // 2)
    samples = Config.VERIFY_FAR_PAIRS if far_pairs is None else far_pairs

    worst = 0.0
    worst_pair = None
    worst_distance = None
    checked = 0

    for di in range(0, reach + 1):
        for dj in range(-reach, reach + 1):
            if di == 0 and dj <= 0:
                continue
            distance = float(_periodic_distance(np.array(di), np.array(dj), M))
            shifted = np.roll(values, shift=(-di, -dj), axis=(0, 1))
            ratio = np.abs(values - shifted) / omega(moc, distance)
            checked += ratio.size
            index = int(np.argmax(ratio))
            if ratio.flat[index] > worst:
                i, j = divmod(index, M)
                worst = float(ratio.flat[index])
                worst_pair = ((i, j), ((i + di) % M, (j + dj) % M))
                worst_distance = distance

    if samples > 0:
        rng = np.random.default_rng(seed)
        first = rng.integers(0, M, size=(samples, 2))
        second = rng.integers(0, M, size=(samples, 2))
        distance = _periodic_distance(first[:, 0] - second[:, 0], first[:, 1] - second[:, 1], M)
        keep = distance > 0
        first, second, distance = first[keep], second[keep], distance[keep]
        if distance.size:
            diff = np.abs(values[first[:, 0], first[:, 1]] - values[second[:, 0], second[:, 1]])
            ratio = diff / omega(moc, distance)
            checked += ratio.size
            index = int(np.argmax(ratio))
            if ratio[index] > worst:
                worst = float(ratio[index])
                worst_pair = (tuple(int(v) for v in first[index]), tuple(int(v) for v in second[index]))
                worst_distance = float(distance[index])

    holds = worst <= 1.0
    if not holds:
        logger.debug("Field violates modulus", worst_ratio=worst, pair=worst_pair, distance=worst_distance)
    return VerificationResult(holds=holds, worst_ratio=worst, worst_pair=worst_pair if worst > 0 else None,
                              worst_distance=worst_distance if worst > 0 else None, pairs_checked=checked)


def fit_scaling(theta0: SpectralField, moc: Moc,
                max_doublings: int = MAX_SCALING_DOUBLINGS) -> Tuple[Moc, VerificationResult]:
    """Start from the data rescaling and double lam until theta0 has the modulus.

    Returns the last modulus tried with its verification; ``holds`` is false if the
    doubling budget ran out.
    """
    physical = to_physical(theta0)
    _, grad_sup = linf_and_grad(theta0)
    scaled = rescale_for_data(moc, grad_sup) if grad_sup > 0 else moc
    result = verify_field_moc(physical, scaled)
    doublings = 0
    while not result.holds and doublings < max_doublings:
        scaled = scaled.scaled(2.0 * scaled.lam)
        result = verify_field_moc(physical, scaled)
        doublings += 1
    logger.debug("Scaling fitted", lam=scaled.lam, doublings=doublings, holds=result.holds)
    return scaled, result


def smallness_check(theta0: Union[SpectralField, PhysicalField], moc: Moc, params: ModelParams,
                    polish: bool = True) -> SmallnessResult:
    """Compare ||grad theta0||^(2-2(a+b)) ||theta0||^(2(a+b)-1) against the smallness constant.

    Physical data is read through its trigonometric interpolant. When the condition holds, the
    data is also checked against the rescaled modulus; a disagreement is reported in ``findings``.
    """
    if isinstance(theta0, PhysicalField):
        theta0 = to_spectral(theta0)
    c = smallness_constant(moc, params)
    linf, grad_sup = linf_and_grad(theta0, polish=polish)
    ab = params.alpha_beta
    lhs = grad_sup ** (2.0 - 2.0 * ab) * linf ** (2.0 * ab - 1.0) if linf > 0 and grad_sup > 0 else 0.0
    satisfied = lhs <= c

    moc_verified = None
    findings: List[str] = []
    if satisfied and grad_sup > 0:
        result = verify_field_moc(to_physical(theta0), rescale_for_data(moc, grad_sup))
        moc_verified = result.holds
        if not result.holds:
            findings.append(
                f"smallness holds (lhs={lhs:.6g} <= c={c:.6g}) but the rescaled modulus fails:"
                f" worst ratio {result.worst_ratio:.6g} at pair {result.worst_pair}"
            )
            logger.warning("Smallness and modulus check disagree", lhs=lhs, c=c, worst_ratio=result.worst_ratio)

    return SmallnessResult(satisfied=satisfied, lhs=lhs, c=c, linf=linf, grad_sup=grad_sup,
                           moc_verified=moc_verified, findings=findings)
