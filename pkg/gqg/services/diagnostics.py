from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize, special

from ..models import AnalyticityEstimate, ModelParams, PhysicalField, RunRecord, SpectralField
from ..utils import Config, InsufficientSamplesError, get_logger
from .spectral_core import lattice, physical_values, symbol_power

logger = get_logger(__name__)

MIN_SHELLS = 3
# An algebraic fit must beat the exponential fit by this residual factor to win.
ALGEBRAIC_PREFERENCE = 0.5
POLISH_CANDIDATES = 5


def sobolev_key(order: float) -> str:
    """Record column name for ||theta||_order"""
    return f"sobolev_{order:.6g}"


def sobolev_norm(theta: SpectralField, s: float, homogeneous: bool = False) -> float:
    """(|c0|^2 + sum_{k != 0} |k|^2s |c_k|^2)^(1/2); the mean is dropped when homogeneous or s < 0"""
    N = theta.grid.N
    c = theta.coeffs
    power = np.abs(c) ** 2
    _, _, kabs = lattice(N)
    weight = np.zeros_like(kabs)
    nonzero = kabs > 0
    weight[nonzero] = kabs[nonzero] ** (2.0 * s)
    total = float(np.sum(weight * power))
    if not homogeneous and s >= 0:
        total += float(power[N, N])
    return float(np.sqrt(total))


def grid_l2_sq(f: PhysicalField) -> float:
    """Grid average of theta^2, equal to sum |c_k|^2 for band-limited data"""
    return float(np.mean(f.values ** 2))


def _trig_value(theta: SpectralField, x: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of the trigonometric polynomial at a point"""
    k1, k2, _ = lattice(theta.grid.N)
    phase = np.exp(1j * (k1 * x[0] + k2 * x[1]))
    terms = theta.coeffs * phase
    value = float(np.sum(terms).real)
    grad = np.array([np.sum(1j * k1 * terms).real, np.sum(1j * k2 * terms).real])
    hess = -np.array([
        [np.sum(k1 * k1 * terms).real, np.sum(k1 * k2 * terms).real],
        [np.sum(k1 * k2 * terms).real, np.sum(k2 * k2 * terms).real],
    ])
    return value, grad, hess


def _polish_extremum(theta: SpectralField, start: np.ndarray, sign: float) -> float:
    """Local maximum of sign * theta near start"""
    def objective(x):
        return -sign * _trig_value(theta, x)[0]

    def jacobian(x):
        return -sign * _trig_value(theta, x)[1]

    def hessian(x):
        return -sign * _trig_value(theta, x)[2]

    result = optimize.minimize(objective, start, jac=jacobian, hess=hessian, method="trust-exact",
                               options={"gtol": 1e-13, "maxiter": 50})
    return float(max(-result.fun, -objective(start)))


def linf_and_grad(theta: SpectralField, refinement: Optional[int] = None, polish: bool = False) -> Tuple[float, float]:
    """Sup of |theta| and |grad theta| sampled on a grid refined beyond M.

    Grid values are lower bounds of the true sups. With ``polish`` the largest grid extrema of
    theta are refined by local maximisation of the trigonometric polynomial.
    """
    grid = theta.grid
    N = grid.N
    size = grid.M * (refinement or Config.SUP_REFINEMENT)
    k1, k2, _ = lattice(N)
    values = physical_values(theta.coeffs, N, size)
    gx = physical_values(1j * k1 * theta.coeffs, N, size)
    gy = physical_values(1j * k2 * theta.coeffs, N, size)

    linf = float(np.max(np.abs(values)))
    grad_sup = float(np.sqrt(np.max(gx * gx + gy * gy)))

    if polish and linf > 0:
        h = 2.0 * np.pi / size
        flat = values.ravel()
        for sign in (1.0, -1.0):
            order = np.argsort(-sign * flat)[:POLISH_CANDIDATES]
            for index in order:
                i, j = divmod(int(index), size)
                linf = max(linf, _polish_extremum(theta, np.array([i * h, j * h]), sign))
    return linf, grad_sup


def _shell_maxima(theta: SpectralField, noise_floor: float) -> Tuple[np.ndarray, np.ndarray]:
    """For each shell j <= |k| < j+1 (j >= 1), the largest |c_k| and the |k| where it sits"""
    _, _, kabs = lattice(theta.grid.N)
    magnitude = np.abs(theta.coeffs)
    nonzero = kabs > 0
    peak = float(np.max(magnitude[nonzero])) if np.any(nonzero) else 0.0
    if peak == 0:
        return np.array([]), np.array([])

    shells = np.floor(kabs[nonzero]).astype(int)
    mags = magnitude[nonzero]
    radii = kabs[nonzero]
    ks: List[float] = []
    values: List[float] = []
    for shell in np.unique(shells):
        members = shells == shell
        local = int(np.argmax(mags[members]))
        value = float(mags[members][local])
        if value > noise_floor * peak:
            ks.append(float(radii[members][local]))
            values.append(value)
    return np.array(ks), np.array(values)


def _linear_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Slope and RMS residual of a least-squares line"""
    coeffs = np.polyfit(x, y, 1)
    residual = y - np.polyval(coeffs, x)
    return float(coeffs[0]), float(np.sqrt(np.mean(residual ** 2)))


def log_weighted_sum(theta: SpectralField, time: float, params: ModelParams) -> float:
    """log of Y = sum |k|^6 |theta_k exp(nu |k|^2a t / 2)|^2"""
    _, _, kabs = lattice(theta.grid.N)
    magnitude = np.abs(theta.coeffs)
    keep = (kabs > 0) & (magnitude > 0)
    if not np.any(keep):
        return float("-inf")
    terms = (6.0 * np.log(kabs[keep]) + 2.0 * np.log(magnitude[keep])
             + params.nu * kabs[keep] ** (2.0 * params.alpha) * time)
    return float(special.logsumexp(terms))


def analyticity_radius(theta: SpectralField, time: Optional[float] = None,
                       params: Optional[ModelParams] = None,
                       noise_floor: Optional[float] = None) -> AnalyticityEstimate:
    """Exponential decay rate of shell maxima of |theta_k| against |k|"""
    floor = Config.NOISE_FLOOR if noise_floor is None else noise_floor
    ks, values = _shell_maxima(theta, floor)

    log_y = None
    if time is not None and params is not None:
        log_y = log_weighted_sum(theta, time, params)
    y3 = None if log_y is None else float(np.exp(log_y)) if log_y < 700 else float("inf")

    if len(ks) < MIN_SHELLS:
        logger.debug("Too few shells above noise floor", shells=len(ks))
        return AnalyticityEstimate(delta=0.0, fit_residual=0.0, Y3=y3, log_Y3=log_y,
                                   shells_used=len(ks), insufficient_shells=True)

    logs = np.log(values)
    slope, residual = _linear_fit(ks, logs)
    _, algebraic_residual = _linear_fit(np.log(ks), logs)
    algebraic = algebraic_residual < ALGEBRAIC_PREFERENCE * residual

    delta = -slope if slope < 0 and not algebraic else 0.0
    return AnalyticityEstimate(delta=delta, fit_residual=residual, Y3=y3, log_Y3=log_y,
                               shells_used=len(ks), algebraic_decay=bool(algebraic))


def _window(record: RunRecord, t_min: Optional[float], t_max: Optional[float]) -> np.ndarray:
    times = record.times()
    lo = t_min if t_min is not None else 0.0
    hi = t_max if t_max is not None else float("inf")
    return (times > 0) & (times >= lo * (1 - 1e-12)) & (times <= hi * (1 + 1e-12))


def smoothing_rate_fit(record: RunRecord, s: float, n: int, t_min: Optional[float] = None,
                       t_max: Optional[float] = None) -> float:
    """log-log slope of ||theta(t)||_{s + n alpha} against t over the window"""
    order = s + n * record.metadata.params.alpha
    key = sobolev_key(order)
    if key not in record.columns:
        raise InsufficientSamplesError(f"record has no column {key}")

    mask = _window(record, t_min, t_max)
    norms = record.series(key)[mask]
    times = record.times()[mask]
    positive = norms > 0
    if np.count_nonzero(positive) < 3:
        raise InsufficientSamplesError(f"need at least 3 positive samples of {key} in the window, got {np.count_nonzero(positive)}")
    slope, _ = _linear_fit(np.log(times[positive]), np.log(norms[positive]))
    return slope


def sobolev_balance(record: RunRecord, s: float) -> np.ndarray:
    """||theta(t)||^2_{H^s} - ||theta0||^2_{H^s} + 2 nu int ||theta||^2_{H^{s+alpha}} (homogeneous norms)"""
    params = record.metadata.params
    low, high = sobolev_key(s) + "_hom", sobolev_key(s + params.alpha) + "_hom"
    for key in (low, high):
        if key not in record.columns:
            raise InsufficientSamplesError(f"record has no column {key}")
    if len(record.samples) < 3:
        raise InsufficientSamplesError("need at least 3 samples for the balance integral")

    times = record.times()
    energy = record.series(low) ** 2
    rate = 2.0 * params.nu * record.series(high) ** 2
    # Same quadrature for every prefix
    integral = integrate.cumulative_simpson(rate, x=times, initial=0.0)
    return energy - energy[0] + integral


def fit_growth_constant(record: RunRecord, s: float, q: float, exponent: float) -> float:
    """Smallest C with balance(t) <= C int_0^t ||theta||_q^exponent along the record"""
    balance = sobolev_balance(record, s)
    key = sobolev_key(q)
    if key not in record.columns:
        raise InsufficientSamplesError(f"record has no column {key}")
    times = record.times()
    growth = integrate.cumulative_simpson(record.series(key) ** exponent, x=times, initial=0.0)
    usable = growth > 0
    if not np.any(usable):
        return 0.0
    return float(max(0.0, np.max(balance[usable] / growth[usable])))


def energy_balance_residual(record: RunRecord) -> float:
    """|l2(T) + dissipation(T) - l2(0)| at the last sample"""
    return float(abs(record.samples[-1].values["energy_residual"]))


def build_observer(params: ModelParams, sobolev_indices: Sequence[float] = (0.0,), homogeneous: bool = False,
                   sup_norms: bool = True, analyticity: bool = True, polish: bool = False):
    """Observer reporting Sobolev norms, sups and the analyticity fit at each sample"""
    orders = sorted(set(float(s) for s in sobolev_indices))

    def observe(theta: SpectralField, time: float) -> Dict[str, float]:
        values: Dict[str, float] = {}
        for order in orders:
            values[sobolev_key(order)] = sobolev_norm(theta, order)
            if homogeneous:
                values[sobolev_key(order) + "_hom"] = sobolev_norm(theta, order, homogeneous=True)
        if sup_norms:
            linf, grad_sup = linf_and_grad(theta, polish=polish)
            values["linf"] = linf
            values["grad_sup"] = grad_sup
        if analyticity:
            estimate = analyticity_radius(theta, time=time, params=params)
            values["analyticity_delta"] = estimate.delta
            values["log_Y3"] = estimate.log_Y3 if estimate.log_Y3 is not None else float("nan")
        return values

    return observe
