"""Run provenance: every artifact embeds the fingerprint that produced it.

The deterministic part (command, hashes, seed, version) goes into the data
file's header line so reruns stay byte-identical; wall-clock timestamps live
only in a sidecar file next to the artifact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from riskfusion import __version__
from riskfusion.io import content_hash, write_json
from riskfusion.parameters import ParameterSet


@dataclass(frozen=True)
class RunManifest:
    command: str
    args: dict
    config_hash: Optional[str]
    parameter_checksums: dict
    seed: Optional[int]
    tool_version: str = __version__
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    @classmethod
    def for_run(
        cls,
        command: str,
        params: ParameterSet,
        args: Optional[dict] = None,
        config: Any = None,
        seed: Optional[int] = None,
    ) -> "RunManifest":
        return cls(
            command=command,
            args=args or {},
            config_hash=content_hash(config) if config is not None else None,
            parameter_checksums=dict(params.checksums),
            seed=seed,
        )

    def header(self) -> dict:
        """Deterministic fields, safe to embed in reproducible artifacts."""
        return {
            "command": self.command,
            "args": self.args,
            "config_hash": self.config_hash,
            "parameters_digest": content_hash(self.parameter_checksums),
            "seed": self.seed,
            "tool_version": self.tool_version,
        }

    def to_json_dict(self) -> dict:
        doc = dict(self.header())
        doc["parameter_checksums"] = self.parameter_checksums
        doc["created_at"] = self.created_at
        return doc

    def write_sidecar(self, artifact_path: Path) -> Path:
        side = Path(str(artifact_path) + ".manifest.json")
        write_json(side, self.to_json_dict())
        return side
