import hashlib
import json
import uuid
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .. import __version__
from ..models import (
    CertificateReport,
    ConstantsUsed,
    ExitStatus,
    ExperimentConfig,
    ExperimentKind,
    ExperimentOutcome,
    Grid,
    InitialDataKind,
    InitialDataSpec,
    Moc,
    MocRegime,
    NonlinearEvaluator,
    RunMetadata,
    RunRecord,
    SpectralField,
)
from ..repositories import ArtifactRepository
from ..utils import (
    CertificationSearchError,
    Config,
    ConfigError,
    InsufficientSamplesError,
    run_context,
    get_logger,
)
from ..utils.config_file import read_config_file
from .diagnostics import (
    build_observer,
    linf_and_grad,
    smoothing_rate_fit,
    sobolev_norm,
)
from .initial_data import generate_initial_data
from .moc_certifier import (
    certify,
    fit_scaling,
    rescale_for_data,
    search_certificate,
    smallness_check,
    smallness_constant,
    verify_field_moc,
)
from .spectral_core import resample, to_physical
from .time_integrator import Observer, run

logger = get_logger(__name__)

# Grid slack allowed on the worst modulus ratio when preservation is expected.
MOC_GRID_SLACK = 0.02
# Earliest snapshot time relative to t_end.
SNAPSHOT_SPAN = 1e-3
PERTURBATION_BAND = 4


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Parse a dotted key-value config file into a validated ExperimentConfig"""
    tree = read_config_file(path)
    try:
        return ExperimentConfig.model_validate(tree)
    except ValidationError as e:
        logger.error("Experiment config rejected", path=str(path), error=str(e))
        raise ConfigError(f"{path}: {e}") from e


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form of the config"""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def snapshot_times(t_end: float, count: int) -> List[float]:
    """``count`` log-spaced times ending at t_end"""
    if count <= 0 or t_end <= 0:
        return []
    if count == 1:
        return [t_end]
    return [float(t) for t in np.geomspace(SNAPSHOT_SPAN * t_end, t_end, count)]


def constants_for(cfg: ExperimentConfig) -> ConstantsUsed:
    cert = cfg.certification
    if cert.C1 is None and cert.C2 is None:
        return ConstantsUsed(C1=Config.DEFAULT_C1, C2=Config.DEFAULT_C2)
    return ConstantsUsed(
        C1=cert.C1 if cert.C1 is not None else Config.DEFAULT_C1,
        C2=cert.C2 if cert.C2 is not None else Config.DEFAULT_C2,
        provenance="experiment config",
    )


def _xi_factors(cfg: ExperimentConfig) -> Optional[Tuple[float, float]]:
    cert = cfg.certification
    if cert.xi_min_factor is None and cert.xi_max_factor is None:
        return None
    return (cert.xi_min_factor or Config.CERT_XI_MIN_FACTOR, cert.xi_max_factor or Config.CERT_XI_MAX_FACTOR)


def certificate_for(cfg: ExperimentConfig) -> CertificateReport:
    """Certify the configured (delta, gamma), or search for a pair when none is given"""
    cert = cfg.certification
    params = cfg.model
    constants = constants_for(cfg)
    tail = 2.0 * params.alpha_beta - 1.0 if cfg.moc_regime == MocRegime.SUBCRITICAL else cert.tail_exponent

    if cert.delta is not None and cert.gamma is not None:
        moc = Moc(regime=cfg.moc_regime, r=cert.r, tail_exponent=tail, delta=cert.delta, gamma=cert.gamma,
                  alpha_beta=params.alpha_beta)
        return certify(moc, params, constants, points=cert.points, xi_factors=_xi_factors(cfg))
    return search_certificate(params, cert.r, tail, constants, max_halvings=cert.max_halvings,
                              points=cert.points, xi_factors=_xi_factors(cfg))


def _scaled_to(theta: SpectralField, amplitude: float) -> SpectralField:
    """theta rescaled so that its sup equals amplitude"""
    linf, _ = linf_and_grad(theta)
    if linf == 0:
        return theta
    return theta.with_coeffs(theta.coeffs * (amplitude / linf))


def moc_preserve_run(cfg: ExperimentConfig, moc: Moc, theta0: Optional[SpectralField] = None,
                     metadata: Optional[RunMetadata] = None,
                     extra_observers: Tuple[Observer, ...] = ()) -> Tuple[RunRecord, Dict[str, Any]]:
    """Evolve theta0 and track the worst ratio |d theta| / omega_lam(d) at every sample.

    Supercritical data is measured against the data rescaling (with the smallness check
    reported); subcritical data against the fitted scaling. ``preservation_expected`` is set
    when the theory predicts the modulus persists.
    """
    params = cfg.model
    theta0 = theta0 if theta0 is not None else generate_initial_data(cfg.initial_data, cfg.grid)
    report: Dict[str, Any] = {"moc": moc.model_dump(mode="json")}

    if moc.regime == MocRegime.SUPERCRITICAL:
        smallness = smallness_check(theta0, moc, params)
        scaled = rescale_for_data(moc, smallness.grad_sup) if smallness.grad_sup > 0 else moc
        report["smallness"] = smallness.model_dump(mode="json")
        expected = smallness.satisfied
    else:
        scaled, fitted = fit_scaling(theta0, moc)
        report["initial_fit_holds"] = fitted.holds
        expected = fitted.holds

    def observe_moc(theta: SpectralField, time: float) -> Dict[str, float]:
        return {"moc_worst_ratio": verify_field_moc(to_physical(theta), scaled).worst_ratio}

    record = run(theta0, params, cfg.stepper, NonlinearEvaluator(mode=cfg.evaluator),
                 observers=(observe_moc, *extra_observers), metadata=metadata)
    ratios = record.series("moc_worst_ratio")
    report.update({
        "lambda": scaled.lam,
        "preservation_expected": bool(expected),
        "max_worst_ratio": float(np.max(ratios)),
        "final_worst_ratio": float(ratios[-1]),
        "worst_ratio_non_increasing": bool(np.all(np.diff(ratios) <= 1e-12)),
        "run_status": record.status,
    })
    return record, report


def _sweep_member(cfg: ExperimentConfig, moc: Moc, amplitude: float) -> Dict[str, Any]:
    """One smallness-sweep entry; top level so it can run in a worker process"""
    theta0 = _scaled_to(generate_initial_data(cfg.initial_data, cfg.grid), amplitude)
    record, report = moc_preserve_run(cfg, moc, theta0)
    smallness = report["smallness"]
    return {
        "amplitude": amplitude,
        "lhs": smallness["lhs"],
        "c": smallness["c"],
        "satisfied": smallness["satisfied"],
        "moc_verified": smallness["moc_verified"],
        "max_worst_ratio": report["max_worst_ratio"],
        "status": record.status,
    }


class ExperimentService:
    """Runs one configured experiment and writes its artifacts through the repository"""

    def __init__(self, repository: ArtifactRepository, max_workers: Optional[int] = None):
        self.repository = repository
        self.max_workers = max_workers or Config.MAX_WORKERS
        self._handlers: Dict[ExperimentKind, Callable[[ExperimentConfig, RunMetadata], Tuple[ExitStatus, Dict]]] = {
            ExperimentKind.DECAY: self._decay,
            ExperimentKind.SMOOTHING: self._smoothing,
            ExperimentKind.ANALYTICITY: self._analyticity,
            ExperimentKind.MOC_PRESERVE: self._moc_preserve,
            ExperimentKind.CONVERGENCE: self._convergence,
            ExperimentKind.CERTIFY: self._certify,
            ExperimentKind.SMALLNESS_SWEEP: self._smallness_sweep,
            ExperimentKind.STABILITY: self._stability,
        }

    def run(self, cfg: ExperimentConfig, digest: str) -> ExperimentOutcome:
        with run_context(run_id=uuid.uuid4().hex[:12], experiment=cfg.experiment.value, config_hash=digest[:12]):
            return self._run(cfg, digest)

    def _run(self, cfg: ExperimentConfig, digest: str) -> ExperimentOutcome:
        metadata = RunMetadata(params=cfg.model, grid=cfg.grid, stepper=cfg.stepper,
                               config_hash=digest, code_version=__version__)
        logger.info("Starting experiment", N=cfg.grid.N, alpha=cfg.model.alpha, beta=cfg.model.beta,
                    regime=cfg.model.regime.value)
        try:
            status, summary = self._handlers[cfg.experiment](cfg, metadata)
        except Exception as e:
            logger.error("Experiment failed", error=str(e))
            raise

        summary = {"experiment": cfg.experiment.value, "status": status.name.lower(), **summary}
        self.repository.write_summary(summary, digest, __version__)
        logger.info("Experiment finished", status=status.name, artifacts=len(self.repository.written))
        return ExperimentOutcome(
            status=status,
            experiment=cfg.experiment,
            config_hash=digest,
            output_dir=str(self.repository.directory),
            summary=summary,
            artifacts=[str(path) for path in self.repository.written],
        )

    def _snapshot_observer(self, cfg: ExperimentConfig) -> Tuple[Observer, List[float]]:
        count = cfg.output.snapshots if cfg.output.snapshots is not None else Config.SNAPSHOT_COUNT
        times = snapshot_times(cfg.stepper.t_end, count)
        pending = list(times)

        def observe(theta: SpectralField, time: float) -> Dict[str, float]:
            for target in pending:
                if abs(time - target) <= 1e-12 * max(1.0, target):
                    self.repository.save_snapshot(theta, to_physical(theta), time, times.index(target),
                                                  kind=cfg.output.snapshot_format)
                    pending.remove(target)
                    break
            return {}

        return observe, times

    def _evolve(self, cfg: ExperimentConfig, metadata: RunMetadata, sobolev_indices: List[float],
                homogeneous: bool = False, theta0: Optional[SpectralField] = None) -> RunRecord:
        theta0 = theta0 if theta0 is not None else generate_initial_data(cfg.initial_data, cfg.grid)
        diagnostics = build_observer(cfg.model, sobolev_indices, homogeneous=homogeneous,
                                     sup_norms=cfg.diagnostics.sup_norms, analyticity=cfg.diagnostics.analyticity)
        snapshots, times = self._snapshot_observer(cfg)
        record = run(theta0, cfg.model, cfg.stepper, NonlinearEvaluator(mode=cfg.evaluator),
                     observers=(diagnostics, snapshots), sample_times=times, metadata=metadata)
        self.repository.save_record(record, formats=cfg.output.formats)
        return record

    @staticmethod
    def _run_status(*records: RunRecord) -> ExitStatus:
        if any(record.status == "blow_up_suspected" for record in records):
            return ExitStatus.BLOW_UP
        return ExitStatus.SUCCESS

    def _decay(self, cfg: ExperimentConfig, metadata: RunMetadata) -> Tuple[ExitStatus, Dict]:
        record = self._evolve(cfg, metadata, cfg.diagnostics.sobolev_indices)
        summary: Dict[str, Any] = {
            "final_time": float(record.times()[-1]),
            "final_l2_sq": float(record.series("l2_sq")[-1]),
            "energy_residual": float(record.series("energy_residual")[-1]),
            "blow_up_time": record.blow_up_time,
        }
        if "linf" in record.columns:
            linf = record.series("linf")
            summary["linf_max_increase"] = float(max(0.0, np.max(np.diff(linf)))) if len(linf) > 1 else 0.0
        return self._run_status(record), summary

    def _smoothing(self, cfg: ExperimentConfig, metadata: RunMetadata) -> Tuple[ExitStatus, Dict]:
        alpha = cfg.model.alpha
        base = cfg.diagnostics.sobolev_indices
        record = self._evolve(cfg, metadata, sorted(set(base) | {s + alpha for s in base}))
        slopes: Dict[str, Optional[float]] = {}
        for s in base:
            try:
                slopes[f"{s:.6g}"] = smoothing_rate_fit(record, s, 1)
            except InsufficientSamplesError as e:
                logger.warning("Smoothing fit skipped", s=s, error=str(e))
                slopes[f"{s:.6g}"] = None
        return self._run_status(record), {"smoothing_slopes": slopes, "reference_slope": -0.5}

    def _analyticity(self, cfg: ExperimentConfig, metadata: RunMetadata) -> Tuple[ExitStatus, Dict]:
        if not cfg.diagnostics.analyticity:
            cfg = cfg.model_copy(update={"diagnostics": cfg.diagnostics.model_copy(update={"analyticity": True})})
        record = self._evolve(cfg, metadata, cfg.diagnostics.sobolev_indices)
        times = record.times()
        deltas = record.series("analyticity_delta")
        later = times > 0
        return self._run_status(record), {
            "radius_positive_for_t_gt_0": bool(np.all(deltas[later] > 0)) if np.any(later) else None,
            "radius_non_decreasing": bool(np.all(np.diff(deltas[later]) >= -1e-12)),
            "final_radius": float(deltas[-1]),
        }

    def _moc_preserve(self, cfg: ExperimentConfig, metadata: RunMetadata) -> Tuple[ExitStatus, Dict]:
        certificate = certificate_for(cfg)
        self.repository.save_certificate(certificate)
        if not certificate.certified:
            return ExitStatus.CERTIFICATION_FAILED, {"certified": False, "worst_margin": certificate.worst_margin}

        record, report = moc_preserve_run(cfg, certificate.moc, metadata=metadata)
        self.repository.save_record(record, formats=cfg.output.formats)
        status = self._run_status(record)
        if (status == ExitStatus.SUCCESS and report["preservation_expected"]
                and report["max_worst_ratio"] > 1.0 + MOC_GRID_SLACK):
            logger.warning("Modulus not preserved", max_worst_ratio=report["max_worst_ratio"])
            status = ExitStatus.CERTIFICATION_FAILED
        return status, report

    def _convergence(self, cfg: ExperimentConfig, metadata: RunMetadata) -> Tuple[ExitStatus, Dict]:
        fine_N = cfg.convergence.fine_N or 2 * cfg.grid.N
        fine_grid = Grid(N=fine_N)
        evaluator = NonlinearEvaluator(mode=cfg.evaluator)
        finals: Dict[str, SpectralField] = {}

        def keep_last(label: str) -> Observer:
            def observe(theta: SpectralField, time: float) -> Dict[str, float]:
                finals[label] = theta
                return {}
            return observe

        # Both runs start from the same coefficients; the fine lattice only adds zero modes.
        coarse0 = generate_initial_data(cfg.initial_data, cfg.grid)
        coarse = run(coarse0, cfg.model, cfg.stepper, evaluator, observers=(keep_last("coarse"),), metadata=metadata)
        fine = run(resample(coarse0, fine_grid), cfg.model, cfg.stepper, evaluator, observers=(keep_last("fine"),),
                   metadata=metadata.model_copy(update={"grid": fine_grid}))
        self.repository.save_record(coarse, name="record_coarse", formats=cfg.output.formats)
        self.repository.save_record(fine, name="record_fine", formats=cfg.output.formats)

        status = self._run_status(coarse, fine)
        summary: Dict[str, Any] = {"coarse_N": cfg.grid.N, "fine_N": fine_N, "t_end": cfg.stepper.t_end}
        if status == ExitStatus.SUCCESS:
            difference = resample(finals["coarse"], fine_grid).coeffs - finals["fine"].coeffs
            summary["l2_difference"] = float(np.sqrt(np.sum(np.abs(difference) ** 2)))
        return status, summary

    def _certify(self, cfg: ExperimentConfig, metadata: RunMetadata) -> Tuple[ExitStatus, Dict]:
        try:
            certificate = certificate_for(cfg)
        except CertificationSearchError as e:
            failure = {"certified": False, "reason": str(e), "best_margin": e.best_margin,
                       "best_candidate": e.best_candidate, "visited": e.visited}
            self.repository.save_json("certificate_failure", {**failure, "candidates": e.candidates})
            return ExitStatus.CERTIFICATION_FAILED, failure

        self.repository.save_certificate(certificate)
        summary: Dict[str, Any] = {
            "certified": certificate.certified,
            "delta": certificate.moc.delta,
            "gamma": certificate.moc.gamma,
            "worst_margin": certificate.worst_margin,
            "worst_xi": certificate.worst_xi,
        }
        if certificate.moc.regime == MocRegime.SUPERCRITICAL:
            summary["smallness_constant"] = smallness_constant(certificate.moc, cfg.model)
        status = ExitStatus.SUCCESS if certificate.certified else ExitStatus.CERTIFICATION_FAILED
        return status, summary

    def _smallness_sweep(self, cfg: ExperimentConfig, metadata: RunMetadata) -> Tuple[ExitStatus, Dict]:
        certificate = certificate_for(cfg)
        self.repository.save_certificate(certificate)
        if not certificate.certified:
            return ExitStatus.CERTIFICATION_FAILED, {"certified": False, "worst_margin": certificate.worst_margin}

        amplitudes = list(cfg.sweep.amplitudes)
        workers = min(self.max_workers, len(amplitudes))
        if workers <= 1:
            rows = [_sweep_member(cfg, certificate.moc, a) for a in amplitudes]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_sweep_member, [cfg] * len(amplitudes),
                                     [certificate.moc] * len(amplitudes), amplitudes))

        table = pd.DataFrame(rows, columns=["amplitude", "lhs", "c", "satisfied", "moc_verified",
                                            "max_worst_ratio", "status"])
        self.repository.save_table("smallness_sweep", table)
        blown = any(row["status"] == "blow_up_suspected" for row in rows)
        violated = [row["amplitude"] for row in rows
                    if row["satisfied"] and row["max_worst_ratio"] > 1.0 + MOC_GRID_SLACK]
        status = ExitStatus.BLOW_UP if blown else ExitStatus.CERTIFICATION_FAILED if violated else ExitStatus.SUCCESS
        return status, {"smallness_constant": smallness_constant(certificate.moc, cfg.model),
                        "members": len(rows), "preservation_violated_at": violated}

    def _stability(self, cfg: ExperimentConfig, metadata: RunMetadata) -> Tuple[ExitStatus, Dict]:
        spec = cfg.stability
        theta0 = generate_initial_data(cfg.initial_data, cfg.grid)
        noise_spec = InitialDataSpec(kind=InitialDataKind.RANDOM_BAND_LIMITED, band=min(PERTURBATION_BAND, cfg.grid.N),
                                     slope=2.0, seed=spec.seed)
        noise = generate_initial_data(noise_spec, cfg.grid).coeffs
        noise = noise * (spec.perturbation / np.sqrt(np.sum(np.abs(noise) ** 2)))
        perturbed0 = theta0.with_coeffs(theta0.coeffs + noise)

        fields: List[Dict[float, SpectralField]] = [{}, {}]

        def capturing(store: Dict[float, SpectralField]) -> Observer:
            def observe(theta: SpectralField, time: float) -> Dict[str, float]:
                store[time] = theta
                return {}
            return observe

        evaluator = NonlinearEvaluator(mode=cfg.evaluator)
        reference = run(theta0, cfg.model, cfg.stepper, evaluator, observers=(capturing(fields[0]),), metadata=metadata)
        perturbed = run(perturbed0, cfg.model, cfg.stepper, evaluator, observers=(capturing(fields[1]),),
                        metadata=metadata)
        self.repository.save_record(reference, name="record_reference", formats=cfg.output.formats)
        self.repository.save_record(perturbed, name="record_perturbed", formats=cfg.output.formats)

        common = sorted(set(fields[0]) & set(fields[1]))
        distances = [sobolev_norm(fields[0][t].with_coeffs(fields[0][t].coeffs - fields[1][t].coeffs),
                                  spec.sobolev_index, homogeneous=True) for t in common]
        table = pd.DataFrame({"time": common, "distance": distances})
        self.repository.save_table("stability", table)

        summary: Dict[str, Any] = {"perturbation": spec.perturbation, "sobolev_index": spec.sobolev_index}
        if distances:
            summary.update({
                "initial_distance": distances[0],
                "final_distance": distances[-1],
                "max_growth": float(max(distances) / distances[0]) if distances[0] > 0 else None,
            })
        return self._run_status(reference, perturbed), summary


def output_directory(cfg: ExperimentConfig, digest: str, override: Optional[Union[str, Path]] = None) -> Path:
    if override is not None:
        return Path(override)
    if cfg.output.directory:
        return Path(cfg.output.directory)
    return Path(Config.OUTPUT_ROOT) / f"{cfg.experiment.value}-{digest[:12]}"


def run_experiment(cfg: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None,
                   max_workers: Optional[int] = None) -> ExperimentOutcome:
    """Run one experiment end to end; artifacts land in the configured output directory"""
    digest = config_hash(cfg)
    repository = ArtifactRepository(output_directory(cfg, digest, output_dir))
    return ExperimentService(repository, max_workers=max_workers).run(cfg, digest)
