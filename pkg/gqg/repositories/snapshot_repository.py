from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from ..models import Grid, PhysicalField, SpectralField
from ..utils import SnapshotFormatError, get_logger

logger = get_logger(__name__)

MAGIC = "GQG1"
PHYSICAL = "physical"
SPECTRAL = "spectral"
SUFFIXES = {PHYSICAL: ".gqg", SPECTRAL: ".spec"}
# Little-endian float64 payload
DTYPE = np.dtype("<f8")


def kind_for(path: Union[str, Path]) -> str:
    return SPECTRAL if Path(path).suffix == SUFFIXES[SPECTRAL] else PHYSICAL


class LoadedSnapshot(NamedTuple):
    kind: str
    grid: Grid
    time: float
    physical: Optional[PhysicalField] = None
    spectral: Optional[SpectralField] = None


class SnapshotRepository:
    """Reads and writes single-field snapshots.

    A snapshot is one ASCII header line ``GQG1 <N> <M> <time>`` followed by the raw
    little-endian float64 payload. The file suffix selects the kind: ``.spec`` files hold
    (2N+1)^2 interleaved (re, im) coefficient pairs in lexicographic (k1, k2) order, any
    other suffix holds M*M physical values in row-major order.
    """

    def write_physical(self, path: Union[str, Path], field: PhysicalField, time: float) -> Path:
        return self._write(path, PHYSICAL, field.grid, time, field.values.astype(DTYPE).ravel())

    def write_spectral(self, path: Union[str, Path], field: SpectralField, time: float) -> Path:
        pairs = np.stack([field.coeffs.real, field.coeffs.imag], axis=-1)
        return self._write(path, SPECTRAL, field.grid, time, pairs.astype(DTYPE).ravel())

    def _write(self, path: Union[str, Path], kind: str, grid: Grid, time: float, payload: np.ndarray) -> Path:
        target = Path(path)
        if kind_for(target) != kind:
            raise SnapshotFormatError(f"{target}: a {kind} snapshot needs a {SUFFIXES[kind]} suffix")
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            header = f"{MAGIC} {grid.N} {grid.M} {time!r}\n".encode("ascii")
            with open(target, "wb") as handle:
                handle.write(header)
                handle.write(payload.tobytes())
            logger.debug("Wrote snapshot", path=str(target), kind=kind, time=time)
            return target
        except OSError as e:
            logger.error("Failed to write snapshot", path=str(target), error=str(e))
            raise

    def read_any(self, path: Union[str, Path]) -> LoadedSnapshot:
        """Load a snapshot of either kind"""
        source = Path(path)
        kind = kind_for(source)
        try:
            raw = source.read_bytes()
        except OSError as e:
            logger.error("Failed to read snapshot", path=str(source), error=str(e))
            raise SnapshotFormatError(f"cannot read snapshot {source}: {e}") from e

        end = raw.find(b"\n")
        if end < 0:
            raise SnapshotFormatError(f"{source}: missing header line")
        try:
            magic, N, M, time = raw[:end].decode("ascii").split()
            grid = Grid(N=int(N), M=int(M))
            time = float(time)
        except (UnicodeDecodeError, ValueError) as e:
            raise SnapshotFormatError(f"{source}: malformed header: {e}") from e
        if magic != MAGIC:
            raise SnapshotFormatError(f"{source}: unknown snapshot magic {magic}")

        body = raw[end + 1:]
        expected = grid.M * grid.M if kind == PHYSICAL else 2 * grid.size * grid.size
        if len(body) != expected * DTYPE.itemsize:
            raise SnapshotFormatError(
                f"{source}: payload has {len(body)} bytes, expected {expected * DTYPE.itemsize}"
            )
        values = np.frombuffer(body, dtype=DTYPE)

        if kind == PHYSICAL:
            field = PhysicalField(grid=grid, values=values.reshape(grid.M, grid.M).copy())
            return LoadedSnapshot(kind=kind, grid=grid, time=time, physical=field)
        pairs = values.reshape(grid.size, grid.size, 2)
        coeffs = pairs[..., 0] + 1j * pairs[..., 1]
        return LoadedSnapshot(kind=kind, grid=grid, time=time, spectral=SpectralField(grid=grid, coeffs=coeffs))
