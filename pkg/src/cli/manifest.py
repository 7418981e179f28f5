import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional

from .. import __version__
from ..utils.errors import ArtifactIOError
from ..utils.io import file_sha256, read_json, write_json

logger = logging.getLogger(__name__)


@dataclass
class RunManifest:
    """Provenance of one verb run: effective config hash, artifacts and timings"""
    verb: str
    config_hash: str
    label: str
    version: str = __version__
    artifacts: Dict[str, str] = field(default_factory=dict)
    checksums: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    _started: Dict[str, float] = field(default_factory=dict, repr=False)

    def add_artifact(self, name: str, path: Path) -> None:
        self.artifacts[name] = str(path)

    def start(self, phase: str) -> None:
        self._started[phase] = time.perf_counter()

    def stop(self, phase: str) -> float:
        elapsed = time.perf_counter() - self._started.pop(phase)
        self.timings[phase] = round(elapsed, 6)
        return elapsed

    def to_dict(self) -> Dict:
        data = asdict(self)
        data.pop("_started")
        return data

    def write(self, path: Path) -> Path:
        for name, artifact in sorted(self.artifacts.items()):
            if not Path(artifact).exists():
                raise ArtifactIOError(f"manifest artifact '{name}' missing: {artifact}")
            self.checksums[name] = file_sha256(Path(artifact))
        written = write_json(path, self.to_dict())
        logger.info("wrote manifest %s (%d artifacts)", path, len(self.artifacts))
        return written


def manifest_path(output_dir: Path, verb: str) -> Path:
    return Path(output_dir) / "manifests" / f"{verb}.json"


def load_manifest(path: Path) -> Optional[Dict]:
    path = Path(path)
    return read_json(path) if path.exists() else None
