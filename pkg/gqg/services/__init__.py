from .spectral_core import (
    lattice,
    symbol_power,
    to_spectral,
    to_physical,
    apply_fractional_laplacian,
    velocity_from_theta,
    gradient,
    dealias_mask,
    resample,
)
from .galerkin_rhs import nonlinear_term, rhs, transport_pairing, triple_sum_S, pairing_S
from .time_integrator import IntegratingFactorState, step, run
from .diagnostics import (
    sobolev_norm,
    linf_and_grad,
    analyticity_radius,
    smoothing_rate_fit,
    sobolev_balance,
    fit_growth_constant,
    build_observer,
)
from .initial_data import generate_initial_data, sobolev_ceiling
from .moc_certifier import (
    omega,
    convection_bound,
    dissipation_bound,
    certify,
    search_parameters,
    search_certificate,
    smallness_constant,
    rescale_for_data,
    fit_scaling,
    verify_field_moc,
    smallness_check,
)
from .experiment_service import (
    ExperimentService,
    load_experiment_config,
    config_hash,
    moc_preserve_run,
    run_experiment,
)
