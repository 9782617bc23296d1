import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, TextIO

from pydantic import ValidationError

from .. import __version__
from ..models import ExitStatus, ExperimentConfig, ExperimentKind, Moc
from ..repositories import SnapshotRepository
from ..services import analyticity_radius, linf_and_grad, sobolev_norm, to_physical, to_spectral, verify_field_moc
from ..services.experiment_service import load_experiment_config, run_experiment
from ..utils import (
    BlowUpSuspected,
    CertificationSearchError,
    ConfigError,
    GQGError,
    SnapshotFormatError,
    get_logger,
)

logger = get_logger(__name__)


def _emit(payload: Dict[str, Any], out: TextIO) -> None:
    out.write(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")


def cmd_run(args: argparse.Namespace, out: TextIO) -> ExitStatus:
    cfg = load_experiment_config(args.config)
    outcome = run_experiment(cfg, output_dir=args.output, max_workers=args.workers)
    _emit(outcome.model_dump(mode="json"), out)
    return outcome.status


def cmd_certify(args: argparse.Namespace, out: TextIO) -> ExitStatus:
    cfg = load_experiment_config(args.config)
    if cfg.experiment != ExperimentKind.CERTIFY:
        try:
            cfg = ExperimentConfig.model_validate({**cfg.model_dump(), "experiment": ExperimentKind.CERTIFY})
        except ValidationError as e:
            raise ConfigError(f"{args.config}: cannot certify with this config: {e}") from e
    outcome = run_experiment(cfg, output_dir=args.output)
    _emit(outcome.model_dump(mode="json"), out)
    return outcome.status


def _load_moc(path: str) -> Moc:
    try:
        document = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read modulus file {path}: {e}") from e
    # A certificate carries its modulus under "moc"
    if isinstance(document, dict) and "moc" in document:
        document = document["moc"]
    try:
        return Moc.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"{path}: invalid modulus: {e}") from e


def cmd_verify_moc(args: argparse.Namespace, out: TextIO) -> ExitStatus:
    loaded = SnapshotRepository().read_any(args.field)
    physical = loaded.physical if loaded.physical is not None else to_physical(loaded.spectral)
    moc = _load_moc(args.moc)
    result = verify_field_moc(physical, moc, seed=args.seed)
    _emit({"field": args.field, "time": loaded.time, **result.model_dump(mode="json")}, out)
    return ExitStatus.SUCCESS if result.holds else ExitStatus.CERTIFICATION_FAILED


def cmd_info(args: argparse.Namespace, out: TextIO) -> ExitStatus:
    loaded = SnapshotRepository().read_any(args.field)
    spectral = loaded.spectral if loaded.spectral is not None else to_spectral(loaded.physical)
    linf, grad_sup = linf_and_grad(spectral)
    estimate = analyticity_radius(spectral)
    _emit({
        "field": args.field,
        "kind": loaded.kind,
        "N": loaded.grid.N,
        "M": loaded.grid.M,
        "time": loaded.time,
        "l2": sobolev_norm(spectral, 0.0),
        "h1": sobolev_norm(spectral, 1.0),
        "linf": linf,
        "grad_sup": grad_sup,
        "analyticity_delta": estimate.delta,
        "algebraic_decay": estimate.algebraic_decay,
    }, out)
    return ExitStatus.SUCCESS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gqg", description="Generalized QG simulator and modulus certifier")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config")
    run.add_argument("--output", default=None, help="artifact directory (overrides output.directory)")
    run.add_argument("--workers", type=int, default=None, help="worker processes for sweeps")
    run.set_defaults(handler=cmd_run)

    certify = sub.add_parser("certify", help="certify a modulus of continuity for the config's parameters")
    certify.add_argument("config")
    certify.add_argument("--output", default=None)
    certify.set_defaults(handler=cmd_certify)

    verify = sub.add_parser("verify-moc", help="check a field snapshot against a modulus (JSON)")
    verify.add_argument("field")
    verify.add_argument("moc")
    verify.add_argument("--seed", type=int, default=0, help="seed for the far-pair sample")
    verify.set_defaults(handler=cmd_verify_moc)

    info = sub.add_parser("info", help="print norms of a field snapshot")
    info.add_argument("field")
    info.set_defaults(handler=cmd_info)
    return parser


def dispatch(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    """Parse arguments, run the command and map failures onto exit codes"""
    args = build_parser().parse_args(argv)
    out = out or sys.stdout
    try:
        return int(args.handler(args, out))
    except (ConfigError, SnapshotFormatError, ValueError) as e:
        logger.error("Invalid input", command=args.command, error=str(e))
        _emit({"error": type(e).__name__, "message": str(e)}, out)
        return int(ExitStatus.CONFIG_ERROR)
    except CertificationSearchError as e:
        logger.error("Certification search failed", error=str(e), best_margin=e.best_margin)
        _emit({"error": type(e).__name__, "message": str(e), "best_margin": e.best_margin,
               "best_candidate": e.best_candidate, "candidates": e.candidates}, out)
        return int(ExitStatus.CERTIFICATION_FAILED)
    except BlowUpSuspected as e:
        logger.error("Blow-up suspected", time=e.time)
        _emit({"error": type(e).__name__, "message": str(e), "time": e.time}, out)
        return int(ExitStatus.BLOW_UP)
    except GQGError as e:
        logger.error("Command failed", command=args.command, error=str(e))
        _emit({"error": type(e).__name__, "message": str(e)}, out)
        return int(ExitStatus.CONFIG_ERROR)
