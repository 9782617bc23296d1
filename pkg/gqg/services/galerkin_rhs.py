import numpy as np

from ..models import EvaluatorMode, ModelParams, NonlinearEvaluator, SpectralField
from ..utils import GridError, get_logger
from .spectral_core import (
    embed,
    gradient,
    hermitian_part,
    lattice,
    restrict,
    symbol_power,
    velocity_from_theta,
)

logger = get_logger(__name__)

TRANSPORT_KERNEL = "transport"
ANTISYMMETRIC_KERNEL = "antisymmetric"


def perp_pairing(l1, l2, m1, m2):
    """<l, m_perp> = l1 m2 - l2 m1"""
    return l1 * m2 - l2 * m1


def _partner_window(i: int, N: int):
    """Index range of m such that l + m stays in the lattice, for l at index i"""
    return max(0, N - i), min(2 * N, 3 * N - i)


def direct_convolution(theta: SpectralField, params: ModelParams, kernel: str = TRANSPORT_KERNEL) -> np.ndarray:
    """sum over l + m = k of w(l, m) theta(m) theta(l), computed literally.

    ``transport`` uses w = <l, m_perp> |m|^(-2 beta); ``antisymmetric`` uses
    w = 1/2 <l, m_perp> (|m|^(-2 beta) - |l|^(-2 beta)). Both equal (u . grad theta)^ on the lattice.
    """
    if kernel not in (TRANSPORT_KERNEL, ANTISYMMETRIC_KERNEL):
        raise ValueError(f"unknown kernel {kernel!r}")

    N = theta.grid.N
    c = theta.coeffs
    k1, k2, _ = lattice(N)
    inv = symbol_power(N, -2.0 * params.beta)
    out = np.zeros_like(c)

    for i in range(2 * N + 1):
        q0, q1 = _partner_window(i, N)
        for j in range(2 * N + 1):
            if i == N and j == N:
                continue
            cl = c[i, j]
            if cl == 0:
                continue
            r0, r1 = _partner_window(j, N)
            rows, cols = slice(q0, q1 + 1), slice(r0, r1 + 1)
            pair = perp_pairing(i - N, j - N, k1[rows, cols], k2[rows, cols])
            if kernel == TRANSPORT_KERNEL:
                weight = pair * inv[rows, cols]
            else:
                weight = 0.5 * pair * (inv[rows, cols] - inv[i, j])
            out[q0 + i - N:q1 + i - N + 1, r0 + j - N:r1 + j - N + 1] += weight * c[rows, cols] * cl
    return out


def pseudospectral_transport(theta: SpectralField, params: ModelParams) -> np.ndarray:
    """(u . grad theta)^ restricted to the lattice, from products on a zero-padded grid"""
    grid = theta.grid
    N = grid.N
    if grid.M < 2 * N + 2:
        raise GridError(f"grid M={grid.M} too small for dealiased products at N={N}")
    size = grid.padded_size
    scale = float(size * size)

    def sample(field: SpectralField) -> np.ndarray:
        return (np.fft.ifft2(embed(field.coeffs, N, size)) * scale).real

    u1, u2 = velocity_from_theta(theta, params)
    g1, g2 = gradient(theta)
    advection = sample(u1) * sample(g1) + sample(u2) * sample(g2)
    return restrict(np.fft.fft2(advection), N) / scale


def nonlinear_term(theta: SpectralField, params: ModelParams, evaluator: NonlinearEvaluator) -> SpectralField:
    """B(theta) = -P_N(u . grad theta) with exact zero mean"""
    if evaluator.mode == EvaluatorMode.DIRECT_CONVOLUTION:
        transport = direct_convolution(theta, params, TRANSPORT_KERNEL)
    else:
        transport = pseudospectral_transport(theta, params)

    B = hermitian_part(-transport)
    N = theta.grid.N
    B[N, N] = 0.0
    return theta.with_coeffs(B)


def rhs(theta: SpectralField, params: ModelParams, evaluator: NonlinearEvaluator) -> SpectralField:
    """B(theta) - nu |k|^(2 alpha) theta"""
    B = nonlinear_term(theta, params, evaluator)
    damping = params.nu * symbol_power(theta.grid.N, 2.0 * params.alpha)
    return theta.with_coeffs(B.coeffs - damping * theta.coeffs)


def transport_pairing(theta: SpectralField, B: SpectralField) -> float:
    """Re sum conj(theta) B; zero for divergence-free transport"""
    return float(np.real(np.sum(np.conj(theta.coeffs) * B.coeffs)))


def triple_sum_S(theta: SpectralField, s: float, params: ModelParams) -> float:
    """S = sum over l + m + k = 0 of <l, m_perp>(|m|^-2b - |l|^-2b)|k|^2s theta(k) theta(l) theta(m).

    Sign convention: S = -2 Re sum_k |k|^2s conj(theta(k)) B(k), see ``pairing_S``.
    """
    N = theta.grid.N
    c = theta.coeffs
    k1, k2, _ = lattice(N)
    inv = symbol_power(N, -2.0 * params.beta)
    weight_k = symbol_power(N, 2.0 * s)
    total = 0.0 + 0.0j

    for i in range(2 * N + 1):
        q0, q1 = _partner_window(i, N)
        for j in range(2 * N + 1):
            if i == N and j == N:
                continue
            cl = c[i, j]
            if cl == 0:
                continue
            r0, r1 = _partner_window(j, N)
            rows, cols = slice(q0, q1 + 1), slice(r0, r1 + 1)
            out_rows = slice(q0 + i - N, q1 + i - N + 1)
            out_cols = slice(r0 + j - N, r1 + j - N + 1)
            kernel = perp_pairing(i - N, j - N, k1[rows, cols], k2[rows, cols]) * (inv[rows, cols] - inv[i, j])
            # theta(k) at k = -(l + m) is conj(theta(l + m))
            total += cl * np.sum(kernel * c[rows, cols] * weight_k[out_rows, out_cols] * np.conj(c[out_rows, out_cols]))

    norm_cubed = float(np.sum(np.abs(c) ** 2)) ** 1.5
    if abs(total.imag) > 1e-12 * max(norm_cubed, 1.0) * max(1.0, float(np.max(weight_k))):
        logger.warning("Triple sum has a large imaginary residue", imag=float(total.imag), real=float(total.real))
    return float(total.real)


def pairing_S(theta: SpectralField, s: float, params: ModelParams, evaluator: NonlinearEvaluator) -> float:
    """-2 Re sum_k |k|^2s conj(theta(k)) B(k), the same quantity as ``triple_sum_S``"""
    B = nonlinear_term(theta, params, evaluator)
    weight = symbol_power(theta.grid.N, 2.0 * s)
    return float(-2.0 * np.real(np.sum(weight * np.conj(theta.coeffs) * B.coeffs)))
