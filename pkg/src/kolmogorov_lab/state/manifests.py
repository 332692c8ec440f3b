"""Run manifests: the only artifacts that carry wall-clock timestamps."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone

UTC = timezone.utc
from pathlib import Path
from typing import Any, cast

_PREFIX = "run_"


@dataclass(slots=True)
class ManifestStore:
    """One JSON file per CLI invocation under ``<out>/manifests``."""

    root: Path

    def path_for(self, run_id: str) -> Path:
        return self.root / f"{_PREFIX}{run_id}.json"

    def write(self, run_id: str, payload: dict[str, Any]) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.path_for(run_id)
        document = {"run_id": run_id, "written_at": datetime.now(tz=UTC).isoformat(), "payload": payload}
        path.write_text(json.dumps(document, indent=2, sort_keys=True, default=str), encoding="utf-8")
        return path

    def read(self, run_id: str) -> dict[str, Any] | None:
        path = self.path_for(run_id)
        if not path.exists():
            return None
        return cast(dict[str, Any], json.loads(path.read_text(encoding="utf-8")))

    def run_ids(self) -> list[str]:
        if not self.root.is_dir():
            return []
        return sorted(p.stem.removeprefix(_PREFIX) for p in self.root.glob(f"{_PREFIX}*.json"))
