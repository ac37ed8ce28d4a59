"""Run outputs: in-memory rows plus CSV/JSON files with stable hashes."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

TRACE_COLUMNS = (
    "tick", "vehicle", "service", "cpu", "gpu", "memory",
    "time_ms", "energy_w", "rate",
    "phi", "window_mean", "p_phi", "e_retrain", "e_offload", "action",
)

EVENT_COLUMNS = (
    "tick", "kind", "vehicle", "service", "source", "target",
    "detail", "gain", "infer_calls", "version",
)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return str(value)
    return str(value)


def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> str:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in columns])
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunResult:
    scenario: str
    seed: int
    ticks: int
    trace_rows: list[dict] = field(default_factory=list)
    event_rows: list[dict] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    out_dir: Path | None = None
    trace_path: Path | None = None
    events_path: Path | None = None
    manifest_path: Path | None = None
    trace_sha256: str | None = None
    events_sha256: str | None = None

    def service_rows(self, service_id: str) -> list[dict]:
        return [r for r in self.trace_rows if r.get("service") == service_id]

    def events_of(self, kind: str) -> list[dict]:
        return [r for r in self.event_rows if r.get("kind") == kind]

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.out_dir = out
        self.trace_path = out / "trace.csv"
        self.events_path = out / "events.csv"
        self.manifest_path = out / "manifest.json"
        self.trace_sha256 = _write_csv(self.trace_path, TRACE_COLUMNS, self.trace_rows)
        self.events_sha256 = _write_csv(self.events_path, EVENT_COLUMNS, self.event_rows)
        manifest = {
            "scenario": self.scenario,
            "seed": self.seed,
            "ticks": self.ticks,
            "trace_rows": len(self.trace_rows),
            "event_rows": len(self.event_rows),
            "trace_sha256": self.trace_sha256,
            "events_sha256": self.events_sha256,
            "violations": self.violations,
        }
        self.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
