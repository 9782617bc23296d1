import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from ..models import CertificateReport, PhysicalField, RunRecord, SpectralField
from ..utils import Config, get_logger
from .snapshot_repository import PHYSICAL, SPECTRAL, SUFFIXES, SnapshotRepository

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"


def fingerprint(path: Union[str, Path]) -> str:
    """SHA-256 of a file's bytes"""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactRepository:
    """Writes the artifacts of one experiment into a single directory and remembers them"""

    def __init__(self, directory: Optional[Union[str, Path]] = None):
        self.directory = Path(directory or Config.OUTPUT_ROOT)
        self.snapshots = SnapshotRepository()
        self.written: List[Path] = []
        self._prepare()

    def _prepare(self) -> None:
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            logger.info("Artifact directory ready", directory=str(self.directory))
        except OSError as e:
            logger.error("Failed to create artifact directory", directory=str(self.directory), error=str(e))
            raise

    def _track(self, path: Path) -> Path:
        if path not in self.written:
            self.written.append(path)
        return path

    def save_table(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.directory / f"{name}.csv"
        try:
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            logger.debug("Saved table", path=str(path), rows=len(frame))
            return self._track(path)
        except OSError as e:
            logger.error("Failed to save table", path=str(path), error=str(e))
            raise

    def save_json(self, name: str, payload: Any) -> Path:
        path = self.directory / f"{name}.json"
        try:
            # Non-finite diagnostics (e.g. log_Y3 of a zero field) are kept as NaN/Infinity literals
            text = json.dumps(payload, indent=2, sort_keys=True, default=str, allow_nan=True)
            path.write_text(text + "\n")
            logger.debug("Saved JSON", path=str(path))
            return self._track(path)
        except OSError as e:
            logger.error("Failed to save JSON", path=str(path), error=str(e))
            raise

    def save_record(self, record: RunRecord, name: str = "record",
                    formats: Sequence[str] = ("csv", "json")) -> List[Path]:
        """RunRecord as a CSV table (time then scalar columns) and/or a JSON document"""
        paths = []
        if "csv" in formats:
            paths.append(self.save_table(name, record.to_dataframe()))
        if "json" in formats:
            paths.append(self.save_json(name, record.model_dump(mode="python")))
        logger.info("Saved run record", name=name, samples=len(record.samples), status=record.status)
        return paths

    def save_certificate(self, report: CertificateReport, name: str = "certificate") -> List[Path]:
        """Certificate JSON plus a margin table for plotting"""
        margins = pd.DataFrame({
            "xi": report.xi_grid,
            "convection": report.convection,
            "dissipation": report.dissipation,
            "margin": report.margins,
            "error": report.errors,
        })
        paths = [
            self.save_json(name, report.model_dump(mode="python")),
            self.save_table(f"{name}_margins", margins),
        ]
        logger.info("Saved certificate", name=name, certified=report.certified, points=len(report.xi_grid))
        return paths

    def save_snapshot(self, theta: SpectralField, physical: PhysicalField, time: float, index: int,
                      kind: str = PHYSICAL) -> List[Path]:
        """Field at one time; ``kind`` is physical, spectral or both"""
        kinds = (PHYSICAL, SPECTRAL) if kind == "both" else (kind,)
        paths = []
        for which in kinds:
            path = self.directory / "snapshots" / f"theta_{index:03d}{SUFFIXES[which]}"
            if which == PHYSICAL:
                self.snapshots.write_physical(path, physical, time)
            else:
                self.snapshots.write_spectral(path, theta, time)
            paths.append(self._track(path))
        return paths

    def write_summary(self, summary: Dict[str, Any], config_hash: str, code_version: str) -> Path:
        """summary.json with the run identity and the SHA-256 of every artifact written so far"""
        artifacts = {str(path.relative_to(self.directory)): fingerprint(path) for path in self.written}
        payload = {**summary, "config_hash": config_hash, "code_version": code_version, "artifacts": artifacts}
        path = self.save_json("summary", payload)
        logger.info("Wrote summary", path=str(path), artifacts=len(artifacts))
        return path
