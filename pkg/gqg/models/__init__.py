from .spectral import (
    Regime,
    Grid,
    ModelParams,
    SpectralField,
    PhysicalField,
    EvaluatorMode,
    NonlinearEvaluator,
)
from .moc import (
    MocRegime,
    Moc,
    BoundEstimate,
    ConstantsUsed,
    CertificateReport,
    VerificationResult,
    SmallnessResult,
)
from .experiment import (
    StepperConfig,
    RunSample,
    RunMetadata,
    RunRecord,
    AnalyticityEstimate,
    InitialDataKind,
    InitialDataSpec,
    ExperimentKind,
    OutputSpec,
    CertificationSpec,
    SweepSpec,
    ConvergenceSpec,
    StabilitySpec,
    DiagnosticsSpec,
    ExperimentConfig,
    ExitStatus,
    ExperimentOutcome,
)
