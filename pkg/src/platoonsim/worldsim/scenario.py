"""Scenario configs: a sectioned text format with a validating loader.

A scenario file is TOML with five top-level sections:

  [world]     physics constants, wrapper defaults, device/type overrides
  [platoon]   initial members and the leader
  [services]  service instances: type, constraints, optional initial host
  [slos]      per-type bounds; "1000/fps" and "energy-limit" resolve at load
  [events]    timed script: start/stop services, join/leave, leadership,
              perturbations

Validation collects every problem it can find and raises ScenarioError
with the full list; parse errors carry the line/column the parser
reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from ..bins import metric_grid
from ..errors import ScenarioError
from ..slo_core import Slo, SloSet
from ..templates import ModelCatalog, ServiceTypeDef, constraint_domain, default_hw_grid
from ..wrapper import ServiceSpec, WrapperConfig
from .profiles import (
    RESOURCES,
    DeviceProfile,
    ServiceGroundTruth,
    default_devices,
    default_slo_templates,
    default_types,
)

EVENT_KINDS = ("start_service", "stop_service", "join", "leave", "transfer_leader", "perturb")


@dataclass(frozen=True)
class ScenarioEvent:
    tick: int
    kind: str
    service: str | None = None
    vehicle: str | None = None
    host: str | None = None
    device: str | None = None
    resource: str | None = None
    delta: float = 0.0
    duration: int = 0


@dataclass(frozen=True)
class WorldParams:
    tick_ms: int = 500
    theta: float = 0.7
    contention_slope: float = 2.0
    max_inflation: float = 10.0
    demand_noise: float = 0.10
    rate_noise: float = 0.05
    model_warmup: bool = False
    handover_ticks: int = 6
    handover_commit_phi: float = 0.9
    offload_cooldown_ticks: int = 20
    decay: float = 1.0


@dataclass(frozen=True)
class DeclaredService:
    spec: ServiceSpec
    wrapper: WrapperConfig
    initial_host: str | None


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    seed: int
    duration_ticks: int
    world: WorldParams
    devices: Mapping[str, DeviceProfile]
    types: Mapping[str, ServiceGroundTruth]
    members: tuple[tuple[str, str], ...]  # (vehicle id, device type)
    leader: str
    services: Mapping[str, DeclaredService]
    events: tuple[ScenarioEvent, ...]

    def catalog(self) -> ModelCatalog:
        return build_catalog(self.types, self.devices, self.services)


def _as_float(value: Any, where: str, errors: list[str]) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{where}: expected a number, got {value!r}")
        return math.nan
    return float(value)


def _resolve_bound(raw: Any, side: str, metric: str, constraints: Mapping[str, str],
                   min_member_limit: float, where: str,
                   errors: list[str]) -> tuple[float, bool]:
    """Resolve one SLO bound; returns (value, tracks_role)."""
    if raw is None:
        return (-math.inf if side == "min" else math.inf), False
    if isinstance(raw, str):
        text = raw.strip()
        if text == "1000/fps":
            fps = constraints.get("fps")
            if fps is None:
                errors.append(f"{where}: '1000/fps' needs an fps constraint")
                return math.inf, False
            return 1000.0 / float(fps), False
        if text == "energy-limit":
            if metric != "energy":
                errors.append(f"{where}: 'energy-limit' only applies to the energy metric")
            return min_member_limit, True
        errors.append(f"{where}: unknown bound expression {text!r}")
        return math.inf, False
    return _as_float(raw, where, errors), False


def _instance_slos(type_name: str, slo_templates: Mapping[str, Mapping],
                   constraints: Mapping[str, str], min_member_limit: float,
                   errors: list[str]) -> tuple[SloSet, bool]:
    template = slo_templates.get(type_name, {})
    slos = []
    tracks_role = False
    for metric in sorted(template):
        bounds = template[metric]
        if not isinstance(bounds, dict):
            errors.append(f"[slos.{type_name}] {metric}: expected a table of min/max")
            continue
        unknown = set(bounds) - {"min", "max"}
        if unknown:
            errors.append(f"[slos.{type_name}] {metric}: unknown keys {sorted(unknown)}")
        where = f"[slos.{type_name}] {metric}"
        lo, _ = _resolve_bound(bounds.get("min"), "min", metric, constraints,
                               min_member_limit, where, errors)
        hi, role = _resolve_bound(bounds.get("max"), "max", metric, constraints,
                                  min_member_limit, where, errors)
        tracks_role = tracks_role or role
        if not (math.isnan(lo) or math.isnan(hi)):
            slos.append(Slo(metric=metric, min=lo, max=hi))
    return SloSet(slos=tuple(slos)), tracks_role


def build_catalog(types: Mapping[str, ServiceGroundTruth],
                  devices: Mapping[str, DeviceProfile],
                  services: Mapping[str, DeclaredService]) -> ModelCatalog:
    """Model templates with bin edges derived from the resolved SLO bounds."""
    energy_thresholds = sorted({p.member_energy_limit for p in devices.values()}
                               | {p.leader_energy_limit for p in devices.values()})
    hw_grid = default_hw_grid()
    defs: dict[str, ServiceTypeDef] = {}
    for type_name, truth in types.items():
        metric_grids: dict[str, Any] = {}
        time_thresholds = set()
        rate_thresholds = set()
        for declared in services.values():
            if declared.spec.service_type != type_name:
                continue
            for slo in declared.spec.slos:
                if slo.metric == "time" and math.isfinite(slo.max):
                    time_thresholds.add(slo.max)
                if slo.metric == "rate" and math.isfinite(slo.min):
                    rate_thresholds.add(slo.min)
        if not time_thresholds:
            fps_domain = truth.constraint_domains.get("fps", (5, 10, 20))
            time_thresholds = {1000.0 / float(f) for f in fps_domain}
        metric_grids["time"] = metric_grid(sorted(time_thresholds))
        metric_grids["energy"] = metric_grid(energy_thresholds)
        if truth.rate_by_pixel is not None:
            thresholds = sorted(rate_thresholds) if rate_thresholds else [0.6]
            metric_grids["rate"] = metric_grid(thresholds, upper=1.0)
        domains = {name: constraint_domain(values)
                   for name, values in truth.constraint_domains.items()}
        defs[type_name] = ServiceTypeDef(
            name=type_name,
            constraint_domains=domains,
            metric_grids=metric_grids,
            hw_grid=hw_grid,
        )
    return ModelCatalog(defs)


def _merge_devices(raw: Mapping, errors: list[str]) -> dict[str, DeviceProfile]:
    devices = default_devices()
    for name, body in raw.items():
        if not isinstance(body, dict):
            errors.append(f"[world.devices.{name}]: expected a table")
            continue
        base = devices.get(name)
        capacity = dict(base.capacity) if base else {}
        capacity.update({k: float(v) for k, v in body.get("capacity", {}).items()})
        try:
            devices[name] = DeviceProfile(
                name=name,
                capacity=capacity,
                energy_base=float(body.get("energy_base", base.energy_base if base else 5.0)),
                energy_slope=float(body.get("energy_slope", base.energy_slope if base else 10.0)),
                member_energy_limit=float(body.get("member_energy_limit",
                                                   base.member_energy_limit if base else 15.0)),
                leader_energy_limit=float(body.get("leader_energy_limit",
                                                   base.leader_energy_limit if base else 25.0)),
            )
        except ValueError as exc:
            errors.append(f"[world.devices.{name}]: {exc}")
    return devices


def _merge_types(raw: Mapping, errors: list[str]) -> dict[str, ServiceGroundTruth]:
    types = default_types()
    for name, body in raw.items():
        if not isinstance(body, dict):
            errors.append(f"[world.types.{name}]: expected a table")
            continue
        base = types.get(name)
        demand = dict(base.demand) if base else {}
        demand.update({k: float(v) for k, v in body.get("demand", {}).items()})
        domains = dict(base.constraint_domains) if base else {}
        for cname, values in body.get("constraints", {}).items():
            if not isinstance(values, list) or not values:
                errors.append(f"[world.types.{name}] constraints.{cname}: expected a nonempty list")
                continue
            domains[cname] = tuple(values)
        rate_by_pixel = base.rate_by_pixel if base else None
        if "rate_by_pixel" in body:
            rate_by_pixel = {str(k): float(v) for k, v in body["rate_by_pixel"].items()}
        try:
            types[name] = ServiceGroundTruth(
                service_type=name,
                demand=demand,
                base_time_ms=float(body.get("base_time_ms", base.base_time_ms if base else 50.0)),
                constraint_domains=domains,
                rate_by_pixel=rate_by_pixel,
            )
        except ValueError as exc:
            errors.append(f"[world.types.{name}]: {exc}")
    return types


def _parse_events(raw: Any, members: set[str], services: Mapping[str, DeclaredService],
                  devices: Mapping[str, DeviceProfile],
                  errors: list[str]) -> tuple[ScenarioEvent, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        errors.append("[events]: expected an array of tables")
        return ()
    events: list[ScenarioEvent] = []
    known_vehicles = set(members)
    last_tick = -1
    for index, body in enumerate(raw):
        where = f"[[events]] #{index + 1}"
        if not isinstance(body, dict):
            errors.append(f"{where}: expected a table")
            continue
        kind = body.get("kind")
        if kind not in EVENT_KINDS:
            errors.append(f"{where}: unknown kind {kind!r} (expected one of {EVENT_KINDS})")
            continue
        tick = body.get("tick")
        if not isinstance(tick, int) or tick < 0:
            errors.append(f"{where}: tick must be a nonnegative integer")
            continue
        if tick < last_tick:
            errors.append(f"{where}: events must be sorted by tick ({tick} after {last_tick})")
        last_tick = max(last_tick, tick)

        event = None
        if kind in ("start_service", "stop_service"):
            sid = body.get("service")
            if sid not in services:
                errors.append(f"{where}: service {sid!r} is not declared in [services]")
                continue
            host = body.get("host")
            if kind == "start_service":
                resolved = host or services[sid].initial_host
                if resolved is None:
                    errors.append(f"{where}: service {sid!r} has no host here or in [services]")
                    continue
                if resolved not in known_vehicles:
                    errors.append(f"{where}: host {resolved!r} is not a member at tick {tick}")
                    continue
                event = ScenarioEvent(tick=tick, kind=kind, service=sid, host=resolved)
            else:
                event = ScenarioEvent(tick=tick, kind=kind, service=sid)
        elif kind == "join":
            vid, device = body.get("vehicle"), body.get("device")
            if not isinstance(vid, str) or not vid:
                errors.append(f"{where}: join needs a vehicle id")
                continue
            if vid in known_vehicles:
                errors.append(f"{where}: vehicle {vid!r} is already a member")
                continue
            if device not in devices:
                errors.append(f"{where}: unknown device type {device!r}")
                continue
            known_vehicles.add(vid)
            event = ScenarioEvent(tick=tick, kind=kind, vehicle=vid, device=device)
        elif kind in ("leave", "transfer_leader"):
            vid = body.get("vehicle")
            if vid not in known_vehicles:
                errors.append(f"{where}: vehicle {vid!r} is not a member by tick {tick}")
                continue
            if kind == "leave":
                known_vehicles.discard(vid)
            event = ScenarioEvent(tick=tick, kind=kind, vehicle=vid)
        elif kind == "perturb":
            vid = body.get("vehicle")
            resource = body.get("resource")
            if vid not in known_vehicles:
                errors.append(f"{where}: vehicle {vid!r} is not a member by tick {tick}")
                continue
            if resource not in RESOURCES:
                errors.append(f"{where}: resource must be one of {RESOURCES}, got {resource!r}")
                continue
            duration = body.get("duration", 0)
            if not isinstance(duration, int) or duration < 1:
                errors.append(f"{where}: duration must be a positive tick count")
                continue
            event = ScenarioEvent(tick=tick, kind=kind, vehicle=vid, resource=resource,
                                  delta=_as_float(body.get("delta"), f"{where} delta", errors),
                                  duration=duration)
        if event is not None:
            events.append(event)
    return tuple(events)


def load_scenario_text(text: str, name: str = "<inline>") -> ScenarioScript:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError([f"{name}: parse error: {exc}"]) from None

    errors: list[str] = []
    for section in ("world", "platoon", "services"):
        if section not in raw:
            errors.append(f"{name}: missing required section [{section}]")
    if errors:
        raise ScenarioError(errors)

    world_raw = raw["world"]
    devices = _merge_devices(world_raw.get("devices", {}), errors)
    types = _merge_types(world_raw.get("types", {}), errors)

    slo_templates = default_slo_templates()
    for type_name, body in raw.get("slos", {}).items():
        if type_name not in types:
            errors.append(f"[slos.{type_name}]: unknown service type")
            continue
        slo_templates[type_name] = body

    params_fields = {}
    world_keys = {
        "tick_ms": int, "theta": float, "contention_slope": float, "max_inflation": float,
        "demand_noise": float, "rate_noise": float, "model_warmup": bool,
        "handover_ticks": int, "handover_commit_phi": float,
        "offload_cooldown_ticks": int, "decay": float,
    }
    for key, cast in world_keys.items():
        if key in world_raw:
            value = world_raw[key]
            if cast is bool and not isinstance(value, bool):
                errors.append(f"[world] {key}: expected true/false")
            elif cast is int and not isinstance(value, int):
                errors.append(f"[world] {key}: expected an integer")
            elif cast is float and not isinstance(value, (int, float)):
                errors.append(f"[world] {key}: expected a number")
            else:
                params_fields[key] = cast(value)
    world = WorldParams(**params_fields)

    seed = world_raw.get("seed", 1)
    if not isinstance(seed, int):
        errors.append("[world] seed: expected an integer")
        seed = 1
    duration = world_raw.get("duration_ticks", 100)
    if not isinstance(duration, int) or duration < 0:
        errors.append("[world] duration_ticks: expected a nonnegative integer")
        duration = 0

    platoon_raw = raw["platoon"]
    members: list[tuple[str, str]] = []
    seen = set()
    for index, body in enumerate(platoon_raw.get("members", [])):
        where = f"[platoon] members #{index + 1}"
        if not isinstance(body, dict) or "id" not in body or "device" not in body:
            errors.append(f"{where}: expected {{id, device}}")
            continue
        vid, device = body["id"], body["device"]
        if vid in seen:
            errors.append(f"{where}: duplicate vehicle id {vid!r}")
            continue
        if device not in devices:
            errors.append(f"{where}: unknown device type {device!r}")
            continue
        seen.add(vid)
        members.append((vid, device))
    if not members:
        errors.append("[platoon]: needs at least one member")
    leader = platoon_raw.get("leader")
    if leader not in seen:
        errors.append(f"[platoon] leader: {leader!r} is not a declared member")

    wrapper_defaults = world_raw.get("wrapper", {})
    min_member_limit = min((p.member_energy_limit for p in devices.values()), default=15.0)

    services: dict[str, DeclaredService] = {}
    for sid, body in raw["services"].items():
        where = f"[services.{sid}]"
        if not isinstance(body, dict):
            errors.append(f"{where}: expected a table")
            continue
        type_name = body.get("type")
        if type_name not in types:
            errors.append(f"{where}: unknown service type {type_name!r}")
            continue
        truth = types[type_name]
        constraints: dict[str, str] = {}
        for cname, domain in truth.constraint_domains.items():
            if cname not in body:
                errors.append(f"{where}: missing constraint {cname!r}")
                continue
            labels = constraint_domain(domain)
            value = body[cname]
            label = constraint_domain([value])[0]
            if label not in labels:
                errors.append(f"{where}: {cname} = {value!r} not in domain {list(domain)}")
                continue
            constraints[cname] = label
        host = body.get("host")
        if host is not None and host not in seen:
            errors.append(f"{where}: host {host!r} is not an initial member")
            host = None
        slos, tracks_role = _instance_slos(type_name, slo_templates, constraints,
                                           min_member_limit, errors)
        wrapper_fields = {}
        for key, cast in (("rho", float), ("omega", float), ("window_size", int),
                          ("buffer_capacity", int), ("retrain_mode", str),
                          ("retrain_interval", int)):
            if key in body:
                wrapper_fields[key] = cast(body[key])
            elif key in wrapper_defaults:
                wrapper_fields[key] = cast(wrapper_defaults[key])
        wrapper_fields.setdefault("cooldown_ticks", world.offload_cooldown_ticks)
        try:
            wrapper = WrapperConfig(**wrapper_fields)
        except ValueError as exc:
            errors.append(f"{where}: {exc}")
            wrapper = WrapperConfig()
        services[sid] = DeclaredService(
            spec=ServiceSpec(id=sid, service_type=type_name, constraints=constraints,
                             slos=slos, energy_tracks_role=tracks_role),
            wrapper=wrapper,
            initial_host=host,
        )

    events = _parse_events(raw.get("events"), seen, services, devices, errors)

    started = {e.service for e in events if e.kind == "start_service"}
    for sid, declared in services.items():
        if declared.initial_host is None and sid not in started:
            errors.append(f"[services.{sid}]: no initial host and no start_service event")

    if errors:
        raise ScenarioError(errors)

    return ScenarioScript(
        name=name, seed=seed, duration_ticks=duration, world=world,
        devices=devices, types=types, members=tuple(members), leader=leader,
        services=services, events=events,
    )


def load_scenario(path: str | Path) -> ScenarioScript:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError([f"cannot read scenario {path}: {exc}"]) from None
    return load_scenario_text(text, name=path.stem)


def bundled_scenario_path(name: str) -> Path:
    """Filesystem path of a scenario shipped with the package."""
    if not name.endswith(".cfg"):
        name = f"{name}.cfg"
    root = resources.files("platoonsim") / "scenarios" / name
    with resources.as_file(root) as path:
        return Path(path)
