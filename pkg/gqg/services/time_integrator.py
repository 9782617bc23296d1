from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..models import (
    ModelParams,
    NonlinearEvaluator,
    RunMetadata,
    RunRecord,
    RunSample,
    SpectralField,
    StepperConfig,
)
from ..utils import BlowUpSuspected, GQGError, get_logger
from .galerkin_rhs import nonlinear_term
from .spectral_core import hermitian_part, physical_values, symbol_power, velocity_from_theta

logger = get_logger(__name__)

Observer = Callable[[SpectralField, float], Dict[str, float]]

# Relative slack under which a sample time counts as reached.
TIME_SNAP = 1e-12


class StepError(GQGError):
    """A step failed for a reason other than blow-up"""

    def __init__(self, time: float, cause: Exception):
        self.time = time
        self.cause = cause
        super().__init__(f"step failed at t={time}: {cause}")


class IntegratingFactorState(BaseModel):
    """Stepper state: the field, its time and the accumulated dissipation 2 nu int ||Lambda^alpha theta||^2"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: SpectralField
    time: float = 0.0
    dissipation_integral: float = 0.0


def _dissipation_rate(coeffs: np.ndarray, weight: np.ndarray) -> float:
    return float(np.sum(weight * (coeffs.real ** 2 + coeffs.imag ** 2)))


def step(state: IntegratingFactorState, params: ModelParams, cfg: StepperConfig,
         evaluator: NonlinearEvaluator, dt: Optional[float] = None) -> IntegratingFactorState:
    """One integrating-factor RK4 step.

    Classical RK4 on xi = exp(nu |k|^2a (t - t0)) theta, written back in theta variables, so
    the linear decay is exact. The dissipation integral is advanced with the same stage weights.
    """
    h = cfg.dt if dt is None else dt
    if h <= 0:
        raise ValueError(f"time step must be positive, got {h}")

    theta = state.theta
    N = theta.grid.N
    symbol = params.nu * symbol_power(N, 2.0 * params.alpha)
    weight = 2.0 * symbol
    v = theta.coeffs

    with np.errstate(over="ignore", invalid="ignore"):
        E = np.exp(-symbol * h)
        E2 = np.exp(-symbol * (0.5 * h))

        if not cfg.nonlinear:
            a = E2 * v
            c = E * v
            d_rate = [_dissipation_rate(v, weight), _dissipation_rate(a, weight), _dissipation_rate(c, weight)]
            new = c
            d_increment = h / 6.0 * (d_rate[0] + 4.0 * d_rate[1] + d_rate[2])
        else:
            def B(coeffs: np.ndarray) -> np.ndarray:
                return nonlinear_term(theta.with_coeffs(coeffs), params, evaluator).coeffs

            k1 = B(v)
            a = hermitian_part(E2 * (v + 0.5 * h * k1))
            k2 = B(a)
            b = hermitian_part(E2 * v + 0.5 * h * k2)
            k3 = B(b)
            c = hermitian_part(E * v + h * E2 * k3)
            k4 = B(c)
            new = hermitian_part(E * v + h / 6.0 * (E * k1 + 2.0 * E2 * (k2 + k3) + k4))
            d_increment = h / 6.0 * (
                _dissipation_rate(v, weight)
                + 2.0 * _dissipation_rate(a, weight)
                + 2.0 * _dissipation_rate(b, weight)
                + _dissipation_rate(c, weight)
            )

    t_new = state.time + h
    if not np.all(np.isfinite(new)) or not np.isfinite(d_increment):
        raise BlowUpSuspected(time=t_new)
    new[N, N] = v[N, N]

    return IntegratingFactorState(
        theta=theta.with_coeffs(new),
        time=t_new,
        dissipation_integral=state.dissipation_integral + d_increment,
    )


def max_velocity(theta: SpectralField, params: ModelParams) -> float:
    """max |u| on the physical grid"""
    u1, u2 = velocity_from_theta(theta, params)
    grid = theta.grid
    v1 = physical_values(u1.coeffs, grid.N, grid.M)
    v2 = physical_values(u2.coeffs, grid.N, grid.M)
    return float(np.sqrt(np.max(v1 * v1 + v2 * v2)))


def cfl_step(theta: SpectralField, params: ModelParams, cfg: StepperConfig) -> float:
    """Largest step allowed by dt and, in adaptive mode, by cfl_safety * dx / max|u|"""
    if not cfg.adaptive or not cfg.nonlinear:
        return cfg.dt
    speed = max_velocity(theta, params)
    if speed <= 0:
        return cfg.dt
    return min(cfg.dt, cfg.cfl_safety * theta.grid.spacing / speed)


def sample_schedule(cfg: StepperConfig, extra_times: Optional[Iterable[float]] = None) -> List[float]:
    """Sample times in (0, t_end]: the uniform interval grid, any extra times, and t_end"""
    if cfg.t_end <= 0:
        return []
    interval = cfg.effective_sample_interval
    count = int(np.floor(cfg.t_end / interval + TIME_SNAP))
    times = {round(interval * n, 15) for n in range(1, count + 1)}
    if extra_times is not None:
        times.update(float(t) for t in extra_times if 0 < t <= cfg.t_end)
    times.add(cfg.t_end)

    ordered: List[float] = []
    for t in sorted(times):
        if not ordered or t - ordered[-1] > TIME_SNAP * max(1.0, t):
            ordered.append(t)
    if ordered[-1] != cfg.t_end:
        ordered[-1] = cfg.t_end
    return ordered


def _core_scalars(state: IntegratingFactorState, l2_initial: float) -> Dict[str, float]:
    coeffs = state.theta.coeffs
    l2_sq = float(np.sum(coeffs.real ** 2 + coeffs.imag ** 2))
    return {
        "l2_sq": l2_sq,
        "dissipation_integral": state.dissipation_integral,
        "energy_residual": l2_sq + state.dissipation_integral - l2_initial,
    }


def run(theta0: SpectralField, params: ModelParams, cfg: StepperConfig, evaluator: NonlinearEvaluator,
        observers: Sequence[Observer] = (), sample_times: Optional[Iterable[float]] = None,
        metadata: Optional[RunMetadata] = None) -> RunRecord:
    """Advance theta0 to cfg.t_end, sampling observers at the schedule times.

    Every sample carries ``l2_sq``, ``dissipation_integral`` and ``energy_residual`` followed by
    the observers' scalars. Non-finite state ends the run with status ``blow_up_suspected``.
    """
    metadata = metadata or RunMetadata(params=params, grid=theta0.grid, stepper=cfg)
    state = IntegratingFactorState(theta=theta0, time=0.0)
    l2_initial = _core_scalars(state, 0.0)["l2_sq"]

    def observe(current: IntegratingFactorState) -> RunSample:
        values = _core_scalars(current, l2_initial)
        snapshot = current.theta.frozen_view()
        for observer in observers:
            values.update(observer(snapshot, current.time))
        return RunSample(time=current.time, values=values)

    samples = [observe(state)]
    schedule = sample_schedule(cfg, sample_times)
    steps = 0
    logger.info("Starting run", N=theta0.grid.N, t_end=cfg.t_end, dt=cfg.dt, samples=len(schedule) + 1,
                evaluator=evaluator.mode.value, nonlinear=cfg.nonlinear)

    try:
        for target in schedule:
            while target - state.time > TIME_SNAP * max(1.0, target):
                h = min(cfl_step(state.theta, params, cfg), target - state.time)
                state = step(state, params, cfg, evaluator, dt=h)
                steps += 1
                if abs(target - state.time) <= TIME_SNAP * max(1.0, target):
                    state = state.model_copy(update={"time": target})
            samples.append(observe(state))
    except BlowUpSuspected as e:
        logger.warning("Blow-up suspected, run terminated", time=e.time, steps=steps)
        return RunRecord(metadata=metadata, samples=samples, status="blow_up_suspected", blow_up_time=e.time)
    except GQGError:
        raise
    except Exception as e:
        logger.error("Step failed", time=state.time, error=str(e))
        raise StepError(state.time, e) from e

    logger.info("Run completed", steps=steps, t_end=state.time,
                energy_residual=samples[-1].values["energy_residual"])
    return RunRecord(metadata=metadata, samples=samples)
