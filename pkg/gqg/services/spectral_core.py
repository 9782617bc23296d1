"""Lattice bookkeeping, transforms and Fourier multipliers on [0, 2pi)^2.

Coefficients are those of exp(i k.x): the forward transform is fft2 / M**2, so Parseval
reads sum |c_k|^2 = grid average of theta^2.
"""
from functools import lru_cache
from typing import Tuple

import numpy as np

from ..models import Grid, ModelParams, PhysicalField, SpectralField
from ..utils import GridError, SymmetryViolation, get_logger

logger = get_logger(__name__)

# Largest imaginary residue (relative to the field norm) discarded by to_physical.
IMAG_RESIDUE_TOL = 1e-12


@lru_cache(maxsize=32)
def lattice(N: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer wavenumber arrays k1, k2 and |k| on the square lattice, read-only"""
    ks = np.arange(-N, N + 1)
    k1, k2 = np.meshgrid(ks, ks, indexing="ij")
    kabs = np.sqrt((k1 * k1 + k2 * k2).astype(np.float64))
    for array in (k1, k2, kabs):
        array.setflags(write=False)
    return k1, k2, kabs


def symbol_power(N: int, power: float) -> np.ndarray:
    """|k|**power on the lattice with |0|**p = 0 for p > 0 and 1 for p = 0.

    For negative powers the zero mode is set to 0; callers decide whether that is legal.
    """
    _, _, kabs = lattice(N)
    if power == 0:
        return np.ones_like(kabs)
    out = np.zeros_like(kabs)
    nonzero = kabs > 0
    out[nonzero] = kabs[nonzero] ** power
    return out


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """Project onto c(-k) = conj(c(k)); the mirrored entries are written from one sum so equality is exact"""
    return 0.5 * (coeffs + np.conj(coeffs[::-1, ::-1]))


def _lattice_indices(N: int, size: int) -> np.ndarray:
    return np.arange(-N, N + 1) % size


def embed(coeffs: np.ndarray, N: int, size: int) -> np.ndarray:
    """Place lattice coefficients into a size x size FFT array"""
    if size < 2 * N + 1:
        raise GridError(f"FFT size {size} cannot hold a lattice of side {2 * N + 1}")
    full = np.zeros((size, size), dtype=np.complex128)
    idx = _lattice_indices(N, size)
    full[np.ix_(idx, idx)] = coeffs
    return full


def restrict(full: np.ndarray, N: int) -> np.ndarray:
    """Read lattice coefficients back out of an FFT array"""
    idx = _lattice_indices(N, full.shape[0])
    return full[np.ix_(idx, idx)]


def to_spectral(f: PhysicalField) -> SpectralField:
    grid = f.grid
    if f.values.shape != (grid.M, grid.M):
        raise GridError(f"field of shape {f.values.shape} does not match grid M={grid.M}")
    full = np.fft.fft2(f.values) / float(grid.M * grid.M)
    coeffs = hermitian_part(restrict(full, grid.N))
    return SpectralField(grid=grid, coeffs=coeffs)


def physical_values(coeffs: np.ndarray, N: int, size: int) -> np.ndarray:
    """Sample the trigonometric polynomial on a size x size grid, checking the imaginary residue"""
    values = np.fft.ifft2(embed(coeffs, N, size)) * float(size * size)
    scale = float(np.sqrt(np.sum(np.abs(coeffs) ** 2)))
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > IMAG_RESIDUE_TOL * max(scale, np.finfo(float).tiny):
        logger.error("Imaginary residue in physical transform", residue=residue, norm=scale)
        raise SymmetryViolation(f"imaginary residue {residue:.3e} exceeds {IMAG_RESIDUE_TOL:.0e} * norm {scale:.3e}")
    return values.real


def to_physical(f: SpectralField) -> PhysicalField:
    grid = f.grid
    return PhysicalField(grid=grid, values=physical_values(f.coeffs, grid.N, grid.M))


def apply_fractional_laplacian(f: SpectralField, power: float) -> SpectralField:
    """Multiply by |k|**power (Lambda**power)"""
    N = f.grid.N
    if power < 0 and f.coeffs[N, N] != 0:
        raise ValueError(f"Lambda^{power} is undefined on a field with nonzero mean {f.coeffs[N, N]}")
    return f.with_coeffs(symbol_power(N, power) * f.coeffs)


def velocity_from_theta(theta: SpectralField, params: ModelParams) -> Tuple[SpectralField, SpectralField]:
    """u_hat(k) = i k_perp |k|^(-2 beta) theta_hat(k), k_perp = (-k2, k1); u_hat(0) = 0"""
    N = theta.grid.N
    k1, k2, _ = lattice(N)
    weighted = 1j * symbol_power(N, -2.0 * params.beta) * theta.coeffs
    u1 = -k2 * weighted
    u2 = k1 * weighted
    return theta.with_coeffs(u1), theta.with_coeffs(u2)


def gradient(theta: SpectralField) -> Tuple[SpectralField, SpectralField]:
    k1, k2, _ = lattice(theta.grid.N)
    return theta.with_coeffs(1j * k1 * theta.coeffs), theta.with_coeffs(1j * k2 * theta.coeffs)


class ModeMask:
    """Predicate for membership in the square truncation lattice"""

    def __init__(self, N: int):
        self.N = N

    def __call__(self, k1: int, k2: int) -> bool:
        return abs(k1) <= self.N and abs(k2) <= self.N

    def select(self, modes):
        """Keep the modes (k1, k2) inside the lattice"""
        return [mode for mode in modes if self(*mode)]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ModeMask) and other.N == self.N

    def __hash__(self) -> int:
        return hash(("ModeMask", self.N))


def dealias_mask(grid: Grid) -> ModeMask:
    return ModeMask(grid.N)


def resample(f: SpectralField, grid: Grid) -> SpectralField:
    """Move coefficients to another lattice by zero padding or truncation"""
    src, dst = f.grid.N, grid.N
    out = np.zeros((grid.size, grid.size), dtype=np.complex128)
    n = min(src, dst)
    out[dst - n:dst + n + 1, dst - n:dst + n + 1] = f.coeffs[src - n:src + n + 1, src - n:src + n + 1]
    return SpectralField(grid=grid, coeffs=out)
