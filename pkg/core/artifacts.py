"""Artifact writers and the run manifest"""

import datetime
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core import __version__
from core.reports import to_plain

logger = logging.getLogger("lyapunov_toolkit.core.artifacts")


class RunStatus(Enum):
    SUCCESS = 0
    ERROR = 1
    VERDICT_FAILURE = 2


def canonical_json(document: Any) -> str:
    return json.dumps(to_plain(document), sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(document: Any) -> str:
    """sha256 of the canonicalized configuration"""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    version: str = __version__
    started_at: datetime.datetime = field(default_factory=datetime.datetime.now)
    wall_clock_seconds: Optional[float] = None
    status: RunStatus = RunStatus.SUCCESS
    error: Optional[str] = None
    artifacts: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "started_at": self.started_at.isoformat(),
            "wall_clock_seconds": self.wall_clock_seconds,
            "status": self.status.value,
            "error": self.error,
            "artifacts": dict(sorted(self.artifacts.items())),
        }


class ArtifactWriter:
    """Writes `<command>.<kind>.{json,csv}` files into one output directory"""

    def __init__(self, output_dir: str, command: str):
        self.output_dir = output_dir
        self.command = command
        self.written: Dict[str, str] = {}
        os.makedirs(output_dir, exist_ok=True)

    def _path(self, kind: str, extension: str) -> str:
        return os.path.join(self.output_dir, f"{self.command}.{kind}.{extension}")

    def json(self, kind: str, document: Any) -> str:
        path = self._path(kind, "json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(to_plain(document), f, sort_keys=True, indent=2)
            f.write("\n")
        self.written[f"{kind}.json"] = path
        logger.info(f"Wrote {path}")
        return path

    def csv(self, kind: str, header: Sequence[str], rows) -> str:
        """Full-precision CSV; 17 significant digits round-trip every float64"""
        path = self._path(kind, "csv")
        table = np.atleast_2d(np.asarray(rows, dtype=float))
        if table.size == 0:
            table = np.empty((0, len(header)))
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            np.savetxt(f, table, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
        self.written[f"{kind}.csv"] = path
        logger.info(f"Wrote {path}")
        return path

    def manifest(self, manifest: RunManifest) -> str:
        manifest.artifacts.update(self.written)
        path = self._path("manifest", "json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest.to_dict(), f, sort_keys=True, indent=2)
            f.write("\n")
        return path


def coordinate_header(d: int, *extra: str, leading: Sequence[str] = ()) -> List[str]:
    return list(leading) + [f"r_{i + 1}" for i in range(d)] + list(extra)
