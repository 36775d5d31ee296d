import logging
import os
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import pytz
import yaml

from src import __version__
from src.utils.digest import file_digest

logger = logging.getLogger(__name__)


def manifest_timestamp() -> str:
    """
    UTC timestamp of the run. SOURCE_DATE_EPOCH pins it, so reruns can be
    byte-identical including their manifests.
    """
    epoch = os.getenv("SOURCE_DATE_EPOCH")
    if epoch:
        moment = datetime.fromtimestamp(int(epoch), tz=pytz.utc)
    else:
        moment = datetime.now(pytz.utc).replace(microsecond=0)
    return moment.isoformat()


def to_plain(value: Any) -> Any:
    """Converts enums, paths, tuples and numpy scalars into YAML-safe values."""
    if isinstance(value, Enum):
        return to_plain(value.value)
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = [to_plain(v) for v in value]
        return sorted(items) if isinstance(value, (set, frozenset)) else items
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class RunManifest:
    """
    Everything needed to reproduce one command run.

    Attributes:
        command (str): The command name.
        config (Dict[str, Any]): The resolved configuration.
        inputs (Dict[str, Dict[str, str]]): Input name to path and SHA-256 digest.
        seed (Optional[int]): The global seed, when the command uses one.
        version (str): The tool version.
        timestamp (str): When the run started.
    """
    command: str
    config: Dict[str, Any]
    inputs: Dict[str, Dict[str, str]] = field(default_factory=dict)
    seed: Optional[int] = None
    version: str = __version__
    timestamp: str = field(default_factory=manifest_timestamp)
    outputs: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def for_inputs(cls, command: str, config: Mapping[str, Any],
                   inputs: Mapping[str, Optional[Union[str, Path]]],
                   seed: Optional[int] = None) -> "RunManifest":
        """Digests every input file before the command touches it."""
        digests = {
            name: {"path": str(path), "sha256": file_digest(path)}
            for name, path in inputs.items() if path is not None
        }
        return cls(command, to_plain(dict(config)), digests, seed)

    def record_output(self, name: str, path: Union[str, Path]) -> None:
        self.outputs[name] = file_digest(path)

    def to_dict(self) -> Dict[str, Any]:
        return to_plain({
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
            "outputs": self.outputs,
        })

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True, allow_unicode=True)
        logger.info("Wrote manifest %s.", path)
        return path


def load_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)
