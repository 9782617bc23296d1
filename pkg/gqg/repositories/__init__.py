from .snapshot_repository import SnapshotRepository, LoadedSnapshot
from .artifact_repository import ArtifactRepository, fingerprint
