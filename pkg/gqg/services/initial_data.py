import numpy as np

from ..models import Grid, InitialDataKind, InitialDataSpec, SpectralField
from ..repositories import SnapshotRepository
from ..utils import BandLimitError, ConfigError, get_logger
from .spectral_core import lattice, resample, to_spectral

logger = get_logger(__name__)


def sobolev_ceiling(slope: float) -> float:
    """Sup of s with sum |k|^(2s - 2 slope) finite on the 2D lattice, i.e. theta0 in H^s iff s < slope - 1"""
    return slope - 1.0


def _place_mode(coeffs: np.ndarray, N: int, k1: int, k2: int, amplitude: float, phase: float) -> None:
    """Add amplitude * cos(k.x + phase)"""
    if abs(k1) > N or abs(k2) > N:
        raise BandLimitError(f"mode ({k1}, {k2}) lies outside the lattice of truncation {N}")
    if k1 == 0 and k2 == 0:
        coeffs[N, N] += amplitude * np.cos(phase)
        return
    value = 0.5 * amplitude * np.exp(1j * phase)
    coeffs[N + k1, N + k2] += value
    coeffs[N - k1, N - k2] += np.conj(value)


def _upper_half(k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    return (k1 > 0) | ((k1 == 0) & (k2 > 0))


def _random_phases(spec: InitialDataSpec, N: int, magnitude: np.ndarray) -> np.ndarray:
    """Hermitian coefficients with the given magnitudes and seeded uniform phases"""
    k1, k2, _ = lattice(N)
    rng = np.random.default_rng(spec.seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=magnitude.shape)
    coeffs = np.zeros(magnitude.shape, dtype=np.complex128)
    upper = _upper_half(k1, k2)
    coeffs[upper] = magnitude[upper] * np.exp(1j * phases[upper])
    mirrored = np.conj(coeffs[::-1, ::-1])
    lower = _upper_half(-k1, -k2)
    coeffs[lower] = mirrored[lower]
    return coeffs


def generate_initial_data(spec: InitialDataSpec, grid: Grid) -> SpectralField:
    """Build seeded, reproducible initial data on the grid's lattice"""
    N = grid.N
    coeffs = np.zeros((grid.size, grid.size), dtype=np.complex128)

    if spec.kind == InitialDataKind.SINGLE_MODE:
        _place_mode(coeffs, N, spec.mode[0], spec.mode[1], spec.amplitude, spec.phase)

    elif spec.kind == InitialDataKind.MULTI_MODE:
        for k1, k2, amplitude, phase in spec.modes:
            _place_mode(coeffs, N, int(k1), int(k2), amplitude, phase)

    elif spec.kind == InitialDataKind.RANDOM_BAND_LIMITED:
        if spec.band > N:
            raise BandLimitError(f"band {spec.band} exceeds truncation N={N}")
        _, _, kabs = lattice(N)
        magnitude = np.zeros_like(kabs)
        inside = (kabs > 0) & (kabs <= spec.band)
        magnitude[inside] = spec.amplitude * kabs[inside] ** (-spec.slope)
        coeffs = _random_phases(spec, N, magnitude)

    elif spec.kind == InitialDataKind.RANDOM_ANALYTIC:
        _, _, kabs = lattice(N)
        magnitude = np.where(kabs > 0, spec.amplitude * np.exp(-spec.decay_rate * kabs), 0.0)
        coeffs = _random_phases(spec, N, magnitude)

    elif spec.kind == InitialDataKind.FILE:
        loaded = SnapshotRepository().read_any(spec.path)
        field = loaded.spectral if loaded.spectral is not None else to_spectral(loaded.physical)
        return resample(field, grid)

    else:
        raise ConfigError(f"unsupported initial data kind {spec.kind}")

    logger.debug("Generated initial data", kind=spec.kind.value, N=N, seed=spec.seed)
    return SpectralField(grid=grid, coeffs=coeffs)
