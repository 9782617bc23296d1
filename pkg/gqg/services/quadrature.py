from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from ..models import BoundEstimate
from ..utils import Config, get_logger

logger = get_logger(__name__)

ORACLE_POINTS = 10 ** 6
# Left end used by the oracle when the integral starts at 0, relative to the right end.
ORACLE_ORIGIN_OFFSET = 1e-14


def adaptive_integral(f: Callable[[float], float], a: float, b: float,
                      points: Optional[Sequence[float]] = None,
                      origin_power: Optional[float] = None,
                      rel_tol: Optional[float] = None) -> BoundEstimate:
    """Adaptive Gauss-Kronrod integral of f on [a, b] with its error estimate.

    ``origin_power`` integrates f(x) * (x - a)**origin_power with the algebraic weight rule,
    for integrands with an integrable power singularity at a. ``b`` may be ``inf``.
    """
    tol = Config.QUAD_REL_TOL if rel_tol is None else rel_tol
    if b <= a:
        return BoundEstimate(0.0, 0.0)

    kwargs = dict(epsabs=0.0, epsrel=tol, limit=400, full_output=1)
    if origin_power is not None:
        result = integrate.quad(f, a, b, weight="alg", wvar=(origin_power, 0.0), **kwargs)
    elif np.isinf(b):
        result = integrate.quad(f, a, b, **kwargs)
    else:
        inside = sorted(p for p in (points or ()) if a < p < b)
        result = integrate.quad(f, a, b, points=inside or None, **kwargs)

    value, error = float(result[0]), float(result[1])
    if len(result) > 3:
        logger.warning("Quadrature reported a problem", a=a, b=b, message=str(result[3])[:200], error=error)
    return BoundEstimate(value, abs(error))


def trapezoid_oracle(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int = ORACLE_POINTS) -> float:
    """Composite trapezoid on a logarithmic grid (x = exp(u)); f must accept arrays.

    For a == 0 the grid starts at ORACLE_ORIGIN_OFFSET * b.
    """
    lo = a if a > 0 else ORACLE_ORIGIN_OFFSET * b
    u = np.linspace(np.log(lo), np.log(b), n)
    x = np.exp(u)
    return float(integrate.trapezoid(f(x) * x, u))
