from enum import Enum, IntEnum
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .moc import MocRegime
from .spectral import EvaluatorMode, Grid, ModelParams, Regime


class StepperConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(..., gt=0.0)
    t_end: float = Field(..., ge=0.0)
    cfl_safety: float = Field(default=0.5, gt=0.0, le=1.0)
    adaptive: bool = False
    nonlinear: bool = True
    sample_interval: Optional[float] = Field(default=None, gt=0.0)

    @property
    def effective_sample_interval(self) -> float:
        if self.sample_interval is not None:
            return self.sample_interval
        return self.t_end / 64.0 if self.t_end > 0 else 1.0


class RunSample(BaseModel):
    time: float
    values: Dict[str, float]


class RunMetadata(BaseModel):
    params: ModelParams
    grid: Grid
    stepper: Optional[StepperConfig] = None
    config_hash: str = ""
    code_version: str = ""


class RunRecord(BaseModel):
    """Time series of named diagnostic scalars"""

    metadata: RunMetadata
    samples: List[RunSample] = Field(default_factory=list)
    status: Literal["completed", "blow_up_suspected"] = "completed"
    blow_up_time: Optional[float] = None

    @model_validator(mode="after")
    def _check_samples(self) -> "RunRecord":
        for earlier, later in zip(self.samples, self.samples[1:]):
            if not later.time > earlier.time:
                raise ValueError(f"sample times must be strictly increasing: {earlier.time} then {later.time}")
        if self.samples:
            keys = set(self.samples[0].values)
            for sample in self.samples[1:]:
                if set(sample.values) != keys:
                    raise ValueError(f"sample at t={sample.time} does not carry the configured scalar set")
        return self

    @property
    def columns(self) -> List[str]:
        return list(self.samples[0].values) if self.samples else []

    def times(self) -> np.ndarray:
        return np.array([sample.time for sample in self.samples])

    def series(self, name: str) -> np.ndarray:
        return np.array([sample.values[name] for sample in self.samples])

    def to_dataframe(self) -> pd.DataFrame:
        rows = [{"time": sample.time, **sample.values} for sample in self.samples]
        return pd.DataFrame(rows, columns=["time", *self.columns])


class AnalyticityEstimate(BaseModel):
    delta: float = Field(..., ge=0.0)
    fit_residual: float
    Y3: Optional[float] = None
    log_Y3: Optional[float] = None
    shells_used: int = 0
    insufficient_shells: bool = False
    algebraic_decay: bool = False


class InitialDataKind(str, Enum):
    SINGLE_MODE = "single_mode"
    MULTI_MODE = "multi_mode"
    RANDOM_BAND_LIMITED = "random_band_limited"
    RANDOM_ANALYTIC = "random_analytic"
    FILE = "file"


class InitialDataSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: InitialDataKind = InitialDataKind.SINGLE_MODE
    mode: Tuple[int, int] = (1, 0)
    amplitude: float = 1.0
    phase: float = 0.0
    modes: List[Tuple[int, int, float, float]] = Field(default_factory=list)
    slope: float = Field(default=2.0, gt=0.0)
    band: int = Field(default=4, ge=1)
    decay_rate: float = Field(default=1.0, gt=0.0)
    seed: int = 0
    path: Optional[str] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "InitialDataSpec":
        if self.kind == InitialDataKind.FILE and not self.path:
            raise ValueError("initial_data.path is required for kind=file")
        if self.kind == InitialDataKind.MULTI_MODE and not self.modes:
            raise ValueError("initial_data.modes is required for kind=multi_mode")
        return self


class ExperimentKind(str, Enum):
    DECAY = "decay"
    SMOOTHING = "smoothing"
    ANALYTICITY = "analyticity"
    MOC_PRESERVE = "moc_preserve"
    CONVERGENCE = "convergence"
    CERTIFY = "certify"
    SMALLNESS_SWEEP = "smallness_sweep"
    STABILITY = "stability"


class OutputSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: Optional[str] = None
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    snapshots: Optional[int] = Field(default=None, ge=0)
    snapshot_format: Literal["physical", "spectral", "both"] = "physical"


class CertificationSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    r: float = Field(default=1.5, gt=1.0, lt=2.0)
    tail_exponent: Optional[float] = Field(default=None, gt=0.0, lt=2.0)
    C1: Optional[float] = Field(default=None, gt=0.0)
    C2: Optional[float] = Field(default=None, gt=0.0)
    points: Optional[int] = Field(default=None, ge=2)
    xi_min_factor: Optional[float] = Field(default=None, gt=0.0)
    xi_max_factor: Optional[float] = Field(default=None, gt=0.0)
    max_halvings: Optional[int] = Field(default=None, ge=0)
    delta: Optional[float] = Field(default=None, gt=0.0)
    gamma: Optional[float] = Field(default=None, gt=0.0)


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    amplitudes: List[float] = Field(default_factory=lambda: [1e-4, 1e-3, 1e-2])


class ConvergenceSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    fine_N: Optional[int] = Field(default=None, ge=2)


class StabilitySpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    perturbation: float = Field(default=1e-6, gt=0.0)
    seed: int = 1
    sobolev_index: float = 0.0


class DiagnosticsSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    sobolev_indices: List[float] = Field(default_factory=lambda: [0.0, 1.0])
    sup_norms: bool = True
    analyticity: bool = True


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: ExperimentKind
    model: ModelParams
    grid: Grid
    stepper: StepperConfig
    initial_data: InitialDataSpec = Field(default_factory=InitialDataSpec)
    evaluator: EvaluatorMode = EvaluatorMode.PSEUDOSPECTRAL
    output: OutputSpec = Field(default_factory=OutputSpec)
    diagnostics: DiagnosticsSpec = Field(default_factory=DiagnosticsSpec)
    certification: CertificationSpec = Field(default_factory=CertificationSpec)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    convergence: ConvergenceSpec = Field(default_factory=ConvergenceSpec)
    stability: StabilitySpec = Field(default_factory=StabilitySpec)

    @model_validator(mode="after")
    def _check_regime(self) -> "ExperimentConfig":
        regime = self.model.regime
        alpha = self.model.alpha

        if self.experiment == ExperimentKind.SMALLNESS_SWEEP and regime != Regime.SUPERCRITICAL:
            raise ValueError("smallness_sweep requires alpha + beta < 1")

        if self.experiment in (ExperimentKind.CERTIFY, ExperimentKind.MOC_PRESERVE, ExperimentKind.SMALLNESS_SWEEP):
            if regime == Regime.CRITICAL:
                raise ValueError("certification is not available for alpha + beta = 1")
            if regime == Regime.SUBCRITICAL and not alpha > 0.5:
                raise ValueError("subcritical certification requires alpha, beta in (1/2, 1)")
            if regime == Regime.SUPERCRITICAL:
                if not alpha < 0.5:
                    raise ValueError("supercritical certification requires alpha in (0, 1/2)")
                if not self.certification.r < 1.0 + 2.0 * alpha:
                    raise ValueError("supercritical certification requires r < 1 + 2 alpha")
                t = self.certification.tail_exponent
                if t is None or not self.model.alpha_beta < t < 1.0:
                    raise ValueError("supercritical certification requires tail_exponent in (alpha+beta, 1)")

        if self.experiment == ExperimentKind.CONVERGENCE:
            fine = self.convergence.fine_N or 2 * self.grid.N
            if fine <= self.grid.N:
                raise ValueError("convergence.fine_N must exceed grid.N")
        return self

    @property
    def moc_regime(self) -> MocRegime:
        return MocRegime.SUBCRITICAL if self.model.regime == Regime.SUBCRITICAL else MocRegime.SUPERCRITICAL


class ExitStatus(IntEnum):
    SUCCESS = 0
    CERTIFICATION_FAILED = 2
    BLOW_UP = 3
    CONFIG_ERROR = 4


class ExperimentOutcome(BaseModel):
    status: ExitStatus
    experiment: ExperimentKind
    config_hash: str
    output_dir: str
    summary: Dict[str, Any] = Field(default_factory=dict)
    artifacts: List[str] = Field(default_factory=list)
