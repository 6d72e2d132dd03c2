import hashlib
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from cactuspile.analysis.engine import Configuration
from cactuspile.analysis.topology import CactusGraph
from cactuspile.config import settings
from cactuspile.documents import (
    ConfigurationDocument,
    GraphDocument,
    configuration_from_document,
    graph_from_document,
)
from cactuspile.errors import InputError
from cactuspile.models import RunManifest

logger = logging.getLogger(__name__)


def digest(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


class ResultStore:
    """Service class for reading inputs and writing outputs with their run manifests"""

    def __init__(self, output_dir: Optional[str] = None):
        self._output_dir = output_dir

    @property
    def output_dir(self) -> Path:
        """Directory relative output paths are resolved against"""
        return Path(self._output_dir or settings.OUTPUT_DIR)

    def resolve(self, out: str) -> Path:
        path = Path(out)
        return path if path.is_absolute() or path.parent != Path(".") else self.output_dir / path

    def _read(self, path: str) -> str:
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise InputError(f"cannot read {path}: {e}") from None

    def load_graph(self, path: str) -> CactusGraph:
        """Parse and validate a graph JSON file"""
        try:
            document = GraphDocument.model_validate_json(self._read(path))
        except ValidationError as e:
            raise InputError(f"{path} is not a valid graph document: {e}") from None
        graph = graph_from_document(document)
        logger.info(f"Loaded {graph} from {path}")
        return graph

    def load_configuration(self, graph: CactusGraph, path: str) -> Configuration:
        """Parse a configuration JSON file against `graph`"""
        try:
            document = ConfigurationDocument.model_validate_json(self._read(path))
        except ValidationError as e:
            raise InputError(f"{path} is not a valid configuration document: {e}") from None
        return configuration_from_document(graph, document)

    def write(self, command: str, content: str, out: Optional[str] = None,
              parameters: Optional[Dict[str, Any]] = None, seed: Optional[int] = None) -> Optional[Path]:
        """Write `content` to `out` (stdout when None) and, for files, its manifest next to it"""
        if out is None:
            sys.stdout.write(content)
            if not content.endswith("\n"):
                sys.stdout.write("\n")
            return None

        path = self.resolve(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
        logger.info(f"Wrote {command} output to {path}")
        self.write_manifest(command, path, content, parameters or {}, seed)
        return path

    def manifest_path(self, path: Path) -> Path:
        return path.with_name(path.name + ".manifest.json")

    def write_manifest(self, command: str, path: Path, content: str,
                       parameters: Dict[str, Any], seed: Optional[int]) -> bool:
        try:
            manifest = RunManifest(
                command=command,
                parameters=parameters,
                seed=seed,
                tool_version=settings.TOOL_VERSION,
                defaults_version=settings.DEFAULTS_VERSION,
                defaults=settings.as_dict(),
                output_file=path.name,
                output_sha256=digest(content),
            )
            self.manifest_path(path).write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
            return True
        except Exception as e:
            logger.error(f"Error writing manifest for {path}: {e}")
            return False

    def load_manifest(self, path: Path) -> RunManifest:
        try:
            return RunManifest.model_validate_json(self._read(str(self.manifest_path(path))))
        except ValidationError as e:
            raise InputError(f"manifest for {path} is invalid: {e}") from None


# Global store instance
result_store = ResultStore()
