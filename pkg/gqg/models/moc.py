from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from .spectral import ModelParams


class MocRegime(str, Enum):
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"


class Moc(BaseModel):
    """Piecewise modulus of continuity.

    On [0, delta] the profile is xi - xi**r. Beyond delta its derivative is
    ``gamma * xi**-t`` (subcritical, t = 2(alpha+beta) - 1) or
    ``gamma * delta**t * xi**-t`` (supercritical, t = tail_exponent in (alpha+beta, 1)).
    ``lam`` rescales it as lam**(2(alpha+beta-1)) * omega(lam * xi).
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    regime: MocRegime
    r: float = Field(..., gt=1.0, lt=2.0)
    tail_exponent: float = Field(..., gt=0.0)
    delta: float = Field(..., gt=0.0)
    gamma: float = Field(..., gt=0.0)
    alpha_beta: float = Field(..., gt=0.5, le=1.5)
    lam: float = Field(default=1.0, gt=0.0, alias="lambda")

    @property
    def tail_coefficient(self) -> float:
        """Coefficient g in omega'(xi) = g * xi**-t for xi > delta"""
        if self.regime == MocRegime.SUBCRITICAL:
            return self.gamma
        return self.gamma * self.delta ** self.tail_exponent

    @property
    def head_slope_at_delta(self) -> float:
        return 1.0 - self.r * self.delta ** (self.r - 1.0)

    @property
    def tail_slope_at_delta(self) -> float:
        return self.tail_coefficient * self.delta ** (-self.tail_exponent)

    def violations(self, alpha: Optional[float] = None) -> List[str]:
        """Family constraints that fail; empty when the parameters are admissible"""
        found: List[str] = []
        ab = self.alpha_beta
        t = self.tail_exponent

        if self.head_slope_at_delta <= 0:
            found.append(f"omega not increasing on [0, delta]: 1 - r delta^(r-1) = {self.head_slope_at_delta:.6g}")
        if not self.tail_slope_at_delta < self.head_slope_at_delta:
            found.append(
                f"derivative drop at delta fails: omega'(delta+) = {self.tail_slope_at_delta:.6g}"
                f" >= omega'(delta-) = {self.head_slope_at_delta:.6g}"
            )

        if self.regime == MocRegime.SUBCRITICAL:
            if not ab > 1.0:
                found.append(f"subcritical family needs alpha + beta > 1, got {ab}")
            if abs(t - (2.0 * ab - 1.0)) > 1e-12:
                found.append(f"subcritical tail exponent must be 2(alpha+beta)-1 = {2.0 * ab - 1.0}, got {t}")
        else:
            if not ab < 1.0:
                found.append(f"supercritical family needs alpha + beta < 1, got {ab}")
            if not ab < t < 1.0:
                found.append(f"tail exponent {t} must lie in (alpha+beta, 1) = ({ab}, 1)")
            if alpha is not None and not self.r < 1.0 + 2.0 * alpha:
                found.append(f"r = {self.r} must be below 1 + 2 alpha = {1.0 + 2.0 * alpha}")
            if self.gamma > (1.0 - t) / 2.0:
                found.append(f"gamma = {self.gamma} exceeds (1 - t)/2 = {(1.0 - t) / 2.0}")
            if self.delta ** (self.r - 1.0) > 0.5:
                found.append(f"delta^(r-1) = {self.delta ** (self.r - 1.0):.6g} exceeds 1/2")
        return found

    def scaled(self, lam: float) -> "Moc":
        return self.model_copy(update={"lam": lam})


class BoundEstimate(NamedTuple):
    value: float
    error: float


class ConstantsUsed(BaseModel):
    C1: float = Field(..., gt=0.0)
    C2: float = Field(..., gt=0.0)
    provenance: str = Field(default="configuration default")


class CertificateReport(BaseModel):
    moc: Moc
    params: ModelParams
    constants_used: ConstantsUsed
    xi_grid: List[float]
    convection: List[float]
    dissipation: List[float]
    margins: List[float]
    errors: List[float]
    certified: bool
    complete: bool = Field(default=True, description="False when evaluation stopped at the first failing point")
    constraint_checks: Dict[str, float] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    code_version: str = ""

    @property
    def worst_margin(self) -> float:
        return max(m + e for m, e in zip(self.margins, self.errors))

    @property
    def worst_xi(self) -> float:
        bounds = [m + e for m, e in zip(self.margins, self.errors)]
        return self.xi_grid[bounds.index(max(bounds))]


class VerificationResult(BaseModel):
    holds: bool
    worst_ratio: float = Field(..., ge=0.0)
    worst_pair: Optional[Tuple[Tuple[int, int], Tuple[int, int]]] = None
    worst_distance: Optional[float] = None
    pairs_checked: int = 0


class SmallnessResult(BaseModel):
    satisfied: bool
    lhs: float = Field(..., ge=0.0)
    c: float = Field(..., gt=0.0)
    linf: float
    grad_sup: float
    moc_verified: Optional[bool] = None
    findings: List[str] = Field(default_factory=list)
