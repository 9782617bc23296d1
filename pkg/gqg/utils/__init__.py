from .config import Config
from .logger import configure_logging, get_logger, run_context
from .errors import (
    GQGError,
    ConfigError,
    RegimeMismatchError,
    GridError,
    SymmetryViolation,
    MocDomainError,
    MocInvariantError,
    DivergentIntegralError,
    CertificationSearchError,
    InsufficientSamplesError,
    BandLimitError,
    BlowUpSuspected,
    SnapshotFormatError,
)
