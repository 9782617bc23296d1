from typing import Any, Dict, List, Optional


class GQGError(Exception):
    """Base class for all gqg errors"""


class ConfigError(GQGError, ValueError):
    """Invalid experiment configuration or config file"""


class RegimeMismatchError(GQGError, ValueError):
    """Operation requested outside the parameter regime it is defined for"""


class GridError(GQGError, ValueError):
    """Grid too small, or field shape inconsistent with its grid"""


class SymmetryViolation(GQGError):
    """Spectral coefficients are not Hermitian-symmetric (corrupted state)"""


class MocDomainError(GQGError, ValueError):
    """Modulus of continuity evaluated at a negative distance"""


class MocInvariantError(GQGError, ValueError):
    """Modulus of continuity parameters violate the family constraints"""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DivergentIntegralError(GQGError, ValueError):
    """An improper bound integral does not converge for the given parameters"""


class CertificationSearchError(GQGError):
    """No certified (delta, gamma) pair found within the sweep budget"""

    def __init__(self, message: str, best_margin: Optional[float] = None,
                 best_candidate: Optional[Dict[str, Any]] = None, visited: int = 0,
                 candidates: Optional[List[Dict[str, Any]]] = None):
        self.best_margin = best_margin
        self.best_candidate = best_candidate
        self.visited = visited
        self.candidates = candidates or []
        super().__init__(message)


class InsufficientSamplesError(GQGError, ValueError):
    """Not enough samples in a run record to fit a rate"""


class BandLimitError(GQGError, ValueError):
    """Requested spectral band exceeds the truncation lattice"""


class BlowUpSuspected(GQGError):
    """Non-finite values appeared during time stepping"""

    def __init__(self, time: float, message: str = "non-finite values in state"):
        self.time = time
        super().__init__(f"{message} at t={time}")


class SnapshotFormatError(GQGError, ValueError):
    """Field snapshot file is malformed"""
