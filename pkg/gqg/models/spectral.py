from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Tolerance used when classifying alpha + beta against 1.
REGIME_TOL = 1e-12


class Regime(str, Enum):
    SUPERCRITICAL = "supercritical"
    CRITICAL = "critical"
    SUBCRITICAL = "subcritical"


class Grid(BaseModel):
    """Square truncation lattice |k1|, |k2| <= N and an M x M physical grid on [0, 2pi)^2"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    N: int = Field(..., ge=1, le=4096)
    M: int = Field(..., ge=4)

    @model_validator(mode="before")
    @classmethod
    def _default_resolution(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("M") is None and "N" in data:
            data = {**data, "M": 2 * int(data["N"]) + 2}
        return data

    @model_validator(mode="after")
    def _check_oversampling(self) -> "Grid":
        if self.M < 2 * self.N + 2:
            raise ValueError(f"grid resolution M={self.M} must be at least 2N+2={2 * self.N + 2}")
        return self

    @property
    def size(self) -> int:
        """Number of lattice modes per axis"""
        return 2 * self.N + 1

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.M

    @property
    def padded_size(self) -> int:
        """Grid size on which quadratic products of lattice modes are alias-free"""
        return max(self.M, 3 * self.N + 1)


class ModelParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(..., gt=0.0, lt=1.0)
    beta: float = Field(..., gt=0.5, lt=1.0)
    nu: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check_order(self) -> "ModelParams":
        total = self.alpha + self.beta
        if not 0.5 < total <= 1.5:
            raise ValueError(f"alpha + beta = {total} must lie in (1/2, 3/2]")
        return self

    @property
    def alpha_beta(self) -> float:
        return self.alpha + self.beta

    @property
    def regime(self) -> Regime:
        total = self.alpha + self.beta
        if abs(total - 1.0) <= REGIME_TOL:
            return Regime.CRITICAL
        return Regime.SUBCRITICAL if total > 1.0 else Regime.SUPERCRITICAL


class SpectralField(BaseModel):
    """Fourier coefficients of a real field.

    ``coeffs[k1 + N, k2 + N]`` is the coefficient of ``exp(i k.x)``, so rows run over k1
    and columns over k2 in lexicographic order.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    coeffs: Any

    @field_validator("coeffs")
    @classmethod
    def _as_complex(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=np.complex128)

    @model_validator(mode="after")
    def _check_shape(self) -> "SpectralField":
        expected = (self.grid.size, self.grid.size)
        if self.coeffs.shape != expected:
            raise ValueError(f"coefficient array has shape {self.coeffs.shape}, expected {expected}")
        return self

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid=grid, coeffs=np.zeros((grid.size, grid.size), dtype=np.complex128))

    def coefficient(self, k1: int, k2: int) -> complex:
        N = self.grid.N
        return complex(self.coeffs[k1 + N, k2 + N])

    def hermitian_defect(self) -> float:
        """max |c(-k) - conj(c(k))|"""
        return float(np.max(np.abs(self.coeffs[::-1, ::-1] - np.conj(self.coeffs))))

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(grid=self.grid, coeffs=coeffs)

    def frozen_view(self) -> "SpectralField":
        """Copy whose coefficient array is read-only"""
        data = np.array(self.coeffs, copy=True)
        data.setflags(write=False)
        return SpectralField(grid=self.grid, coeffs=data)


class EvaluatorMode(str, Enum):
    DIRECT_CONVOLUTION = "direct"
    PSEUDOSPECTRAL = "pseudospectral"


class NonlinearEvaluator(BaseModel):
    """Selects how the transport term is evaluated"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: EvaluatorMode = EvaluatorMode.PSEUDOSPECTRAL


class PhysicalField(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: Any

    @field_validator("values")
    @classmethod
    def _as_real(cls, value: Any) -> np.ndarray:
        array = np.asarray(value)
        if np.iscomplexobj(array):
            raise ValueError("physical values must be real")
        array = array.astype(np.float64, copy=False)
        if not np.all(np.isfinite(array)):
            raise ValueError("physical values must be finite")
        return array

    @model_validator(mode="after")
    def _check_shape(self) -> "PhysicalField":
        expected = (self.grid.M, self.grid.M)
        if self.values.shape != expected:
            raise ValueError(f"value array has shape {self.values.shape}, expected {expected}")
        return self
