"""Post-run analysis of trace and event rows.

Reports are computed either from an in-memory RunResult or from a run
directory written earlier. The compare mode exists to put two retrain
policies side by side on identical workloads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import PlatoonSimError
from .worldsim import RunResult

RESOLUTION_WINDOW_MEAN = 0.9


@dataclass(frozen=True)
class ServiceReport:
    service: str
    ticks: int
    mse: float
    mean_phi: float
    mean_window: float
    mean_p_phi: float
    retrain_requests: int
    offload_searches: int
    moves_committed: int
    first_search_tick: int | None
    resolution_ticks: int | None


@dataclass(frozen=True)
class RunReport:
    scenario: str
    seed: int
    ticks: int
    services: tuple[ServiceReport, ...]
    overall_mse: float
    retrains_applied: int
    handovers_committed: int
    handovers_aborted: int
    forced_moves: int
    wrapper_inferences: int
    search_set_evaluations: int
    violations: tuple[str, ...] = field(default_factory=tuple)

    def service(self, service_id: str) -> ServiceReport:
        for entry in self.services:
            if entry.service == service_id:
                return entry
        raise PlatoonSimError(f"no service {service_id!r} in this report")


def _float(value) -> float:
    if value is None or value == "":
        return math.nan
    return float(value)


def _int(value, default: int = 0) -> int:
    if value is None or value == "":
        return default
    return int(float(value))


def _service_report(sid: str, rows: list[dict], events: list[dict]) -> ServiceReport:
    errors = []
    phis, windows, predictions = [], [], []
    for row in rows:
        p_phi = _float(row.get("p_phi"))
        window = _float(row.get("window_mean"))
        if not (math.isnan(p_phi) or math.isnan(window)):
            errors.append((p_phi - window) ** 2)
        phis.append(_float(row.get("phi")))
        windows.append(window)
        predictions.append(p_phi)

    searches = [e for e in events if e.get("kind") == "offload_search"
                and e.get("service") == sid]
    first_search = min((_int(e.get("tick")) for e in searches), default=None)
    resolution = None
    if first_search is not None:
        for row in rows:
            tick = _int(row.get("tick"))
            if tick <= first_search:
                continue
            if _float(row.get("window_mean")) >= RESOLUTION_WINDOW_MEAN:
                resolution = tick - first_search
                break

    def mean(xs: list[float]) -> float:
        xs = [x for x in xs if not math.isnan(x)]
        return sum(xs) / len(xs) if xs else math.nan

    return ServiceReport(
        service=sid,
        ticks=len(rows),
        mse=sum(errors) / len(errors) if errors else math.nan,
        mean_phi=mean(phis),
        mean_window=mean(windows),
        mean_p_phi=mean(predictions),
        retrain_requests=sum(1 for e in events
                             if e.get("kind") == "retrain_request" and e.get("service") == sid),
        offload_searches=len(searches),
        moves_committed=sum(1 for e in events
                            if e.get("kind") == "handover_commit" and e.get("service") == sid),
        first_search_tick=first_search,
        resolution_ticks=resolution,
    )


def build_report(result: RunResult) -> RunReport:
    return _build(result.scenario, result.seed, result.ticks,
                  result.trace_rows, result.event_rows, tuple(result.violations))


def _build(scenario: str, seed: int, ticks: int, trace_rows: list[dict],
           event_rows: list[dict], violations: tuple[str, ...]) -> RunReport:
    by_service: dict[str, list[dict]] = {}
    for row in trace_rows:
        by_service.setdefault(row["service"], []).append(row)
    services = tuple(_service_report(sid, by_service[sid], event_rows)
                     for sid in sorted(by_service))
    mses = [s.mse for s in services if not math.isnan(s.mse)]
    return RunReport(
        scenario=scenario,
        seed=seed,
        ticks=ticks,
        services=services,
        overall_mse=sum(mses) / len(mses) if mses else math.nan,
        retrains_applied=sum(1 for e in event_rows if e.get("kind") == "retrain"),
        handovers_committed=sum(1 for e in event_rows if e.get("kind") == "handover_commit"),
        handovers_aborted=sum(1 for e in event_rows if e.get("kind") == "handover_abort"),
        forced_moves=sum(1 for e in event_rows if e.get("kind") == "offload_forced"),
        wrapper_inferences=len(trace_rows),
        search_set_evaluations=sum(_int(e.get("infer_calls")) for e in event_rows),
        violations=violations,
    )


def load_report(run_dir: str | Path) -> RunReport:
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    trace_path = run_dir / "trace.csv"
    events_path = run_dir / "events.csv"
    for path in (manifest_path, trace_path, events_path):
        if not path.exists():
            raise PlatoonSimError(f"not a run directory: missing {path.name} in {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    with trace_path.open(newline="") as handle:
        trace_rows = list(csv.DictReader(handle))
    with events_path.open(newline="") as handle:
        event_rows = list(csv.DictReader(handle))
    return _build(manifest.get("scenario", run_dir.name), int(manifest.get("seed", 0)),
                  int(manifest.get("ticks", 0)), trace_rows, event_rows,
                  tuple(manifest.get("violations", [])))


def report_to_json(report: RunReport) -> dict:
    payload = asdict(report)
    payload["services"] = [asdict(s) for s in report.services]
    return payload


def compare_reports(a: RunReport, b: RunReport) -> dict:
    """MSE of run a relative to run b, per shared service and overall."""
    shared = sorted({s.service for s in a.services} & {s.service for s in b.services})
    per_service = {}
    for sid in shared:
        mse_a, mse_b = a.service(sid).mse, b.service(sid).mse
        per_service[sid] = {
            "mse_a": mse_a,
            "mse_b": mse_b,
            "ratio": mse_a / mse_b if mse_b > 0 else math.inf,
        }
    ratio = (a.overall_mse / b.overall_mse
             if b.overall_mse and b.overall_mse > 0 else math.inf)
    return {
        "a": {"scenario": a.scenario, "seed": a.seed, "overall_mse": a.overall_mse},
        "b": {"scenario": b.scenario, "seed": b.seed, "overall_mse": b.overall_mse},
        "services": per_service,
        "overall_ratio": ratio,
    }


def render_report(report: RunReport) -> str:
    lines = [
        f"scenario {report.scenario}  seed {report.seed}  ticks {report.ticks}",
        f"retrains {report.retrains_applied}"
        f"  moves {report.handovers_committed} (+{report.forced_moves} forced,"
        f" {report.handovers_aborted} aborted)"
        f"  wrapper inferences {report.wrapper_inferences}"
        f"  search set-evaluations {report.search_set_evaluations}",
    ]
    header = (f"{'service':<12}{'ticks':>6}{'mse':>10}{'phi':>8}{'wmean':>8}"
              f"{'p_phi':>8}{'retr':>6}{'srch':>6}{'moves':>6}  resolution")
    lines.append(header)
    lines.append("-" * len(header))
    for s in report.services:
        resolution = "-" if s.resolution_ticks is None else f"{s.resolution_ticks} ticks"
        lines.append(
            f"{s.service:<12}{s.ticks:>6}{s.mse:>10.4f}{s.mean_phi:>8.3f}"
            f"{s.mean_window:>8.3f}{s.mean_p_phi:>8.3f}{s.retrain_requests:>6}"
            f"{s.offload_searches:>6}{s.moves_committed:>6}  {resolution}"
        )
    if report.violations:
        lines.append(f"violations: {len(report.violations)}")
        lines.extend(f"  {v}" for v in report.violations[:10])
    return "\n".join(lines)
