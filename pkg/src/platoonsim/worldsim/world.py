"""Discrete-time platoon world: physics, wrappers, and the message fabric.

Tick pipeline:

  1. scripted events (service starts/stops, membership churn, perturbations)
  2. physics: per-vehicle utilization, processing time, energy, recognition rate
  3. wrapper loop for every authoritative service instance
  4. delivery of last tick's messages (retrain flow, offload negotiation)
  5. probation advance for graceful handovers
  6. invariant sweep and the tick marker row

Every message takes one tick, so a retrain lands as a fresh model two
ticks after the wrapper raised it (request to the leader, then the
broadcast), and an offload commits two ticks after the search (request
to the target, acceptance back to the source).
"""

from __future__ import annotations

import itertools
import math
from pathlib import Path
from typing import Mapping

import numpy as np

from ..bayesnet.model import parl_update
from ..bins import Binning
from ..errors import PlatoonSimError
from ..offload import (
    HandoverOutcome,
    HandoverState,
    begin_handover,
    evaluate_offload,
    handover_tick,
)
from ..platoon import (
    AssignmentMap,
    ModelRegistry,
    ModelUpdate,
    OffloadAccept,
    OffloadReject,
    OffloadRequest,
    Platoon,
    RetrainRequest,
    Vehicle,
    apply_model_update,
    handle_retrain_request,
)
from ..slo_core import MetricsRecord, Observation, set_fulfillment
from ..templates import SOLO_NO, SOLO_VARIABLE, SOLO_YES, ServiceTypeDef, constraint_domain
from ..wrapper import (
    OffloadAction,
    RetrainAction,
    WrapperState,
    effective_slos,
    fresh_state_after_move,
    wrapper_tick,
)
from .profiles import RESOURCES, DeviceProfile, ServiceGroundTruth
from .scenario import ScenarioEvent, ScenarioScript
from .trace import RunResult

# Solo observations dominate the synthetic sweep so a freshly warmed
# model predicts close to the clean-host fulfillment; co-location and
# background rows still seed the metric rows the search relies on.
WARMUP_SOLO_COUNT = 200
WARMUP_PAIR_COUNT = 12
WARMUP_BACKGROUND_COUNT = 4
WARMUP_BACKGROUND_LEVELS = (0.2, 0.45)


def _hw_label(grid: Binning, value: float) -> str:
    """Nearest-bin label for a utilization level.

    Rounding (not flooring) keeps the discrete footprint convolution
    honest: floors would bias every summand down half a bin.
    """
    index = min(len(grid.labels) - 1, int(value * len(grid.labels) + 0.5))
    return grid.labels[index]


def make_record(tick: int, type_def: ServiceTypeDef, constraints: Mapping[str, str],
                solo: str, util: Mapping[str, float],
                metrics: Mapping[str, float]) -> MetricsRecord:
    """Bin raw observations into a record matching the model's variables."""
    values: dict[str, Observation] = {}
    for name, label in constraints.items():
        values[name] = Observation(value=label, bin=label)
    values[SOLO_VARIABLE] = Observation(value=solo, bin=solo)
    for rname in RESOURCES:
        level = util[rname]
        values[rname] = Observation(value=level, bin=_hw_label(type_def.hw_grid, level))
    for mname, grid in type_def.metric_grids.items():
        raw = metrics[mname]
        values[mname] = Observation(value=raw, bin=grid.labels[grid.bin_index(raw)])
    return MetricsRecord(tick=tick, values=values)


class World:
    """One runnable scenario instance. Build, then call run() once."""

    def __init__(self, script: ScenarioScript, *, seed: int | None = None,
                 handover_ticks: int | None = None):
        self.script = script
        self.params = script.world
        self.horizon = script.world.handover_ticks if handover_ticks is None else handover_ticks
        if self.horizon < 0:
            raise PlatoonSimError("handover horizon must be nonnegative")
        self.seed = script.seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        self.catalog = script.catalog()
        self.devices: dict[str, DeviceProfile] = dict(script.devices)
        self.types: dict[str, ServiceGroundTruth] = dict(script.types)
        self.platoon = Platoon(
            [Vehicle(id=vid, device_type=dev) for vid, dev in script.members],
            script.leader,
        )
        self.assignments = AssignmentMap()
        self.registries: dict[str, ModelRegistry] = {
            vid: ModelRegistry(self.catalog) for vid, _ in script.members
        }
        self.specs = {sid: d.spec for sid, d in script.services.items()}
        self.wrapper_cfg = {sid: d.wrapper for sid, d in script.services.items()}
        self.states: dict[str, WrapperState] = {}
        self.handovers: dict[str, HandoverState] = {}
        # Accepted-but-uncommitted moves, sid -> (source, target, tick).
        self.accepted_moves: dict[str, tuple[str, str, int]] = {}
        self.perturbations: list[dict] = []
        self.pending: list[tuple[int, int, str, object]] = []
        self.last_physics: dict[str, dict] = {}
        self._seq = 0
        self.tick = -1
        self._ran = False
        self.result = RunResult(scenario=script.name, seed=self.seed, ticks=0)
        self._implicit_starts = tuple(
            ScenarioEvent(tick=0, kind="start_service", service=sid,
                          host=script.services[sid].initial_host)
            for sid in sorted(script.services)
            if script.services[sid].initial_host is not None
        )
        if self.params.model_warmup:
            self._warm_models()

    # --- outputs -------------------------------------------------------------

    def _event(self, kind: str, *, vehicle: str = "", service: str = "", source: str = "",
               target: str = "", detail: str = "", gain: float | None = None,
               infer_calls: int | None = None, version: int | None = None) -> None:
        self.result.event_rows.append({
            "tick": self.tick, "kind": kind, "vehicle": vehicle, "service": service,
            "source": source, "target": target, "detail": detail,
            "gain": gain, "infer_calls": infer_calls, "version": version,
        })

    def _violation(self, text: str) -> None:
        self.result.violations.append(f"tick {self.tick}: {text}")

    # --- messages ------------------------------------------------------------

    def _send(self, recipient: str, message: object) -> None:
        self.pending.append((self.tick + 1, self._seq, recipient, message))
        self._seq += 1

    # --- model warmup ----------------------------------------------------------

    def _warmup_loads(self, own: Mapping[str, float],
                      profile: DeviceProfile) -> list[tuple[str, dict[str, float], int]]:
        loads: list[tuple[str, dict[str, float], int]] = [
            (SOLO_YES, dict(own), WARMUP_SOLO_COUNT)
        ]
        # Pairwise co-location only: three-service combinations stay at the
        # smoothing prior, so crowding a host is something the platoon has
        # to discover from live evidence rather than assume from the sweep.
        for mate in sorted(self.types):
            truth = self.types[mate]
            util = dict(own)
            for rname in RESOURCES:
                util[rname] += truth.fraction(rname, profile)
            loads.append((SOLO_NO, util, WARMUP_PAIR_COUNT))
        for level in WARMUP_BACKGROUND_LEVELS:
            util = {rname: own[rname] + level for rname in RESOURCES}
            loads.append((SOLO_NO, util, WARMUP_BACKGROUND_COUNT))
        return loads

    def _warmup_records(self, service_type: str, device_type: str) -> list[MetricsRecord]:
        truth = self.types[service_type]
        profile = self.devices[device_type]
        type_def = self.catalog.type_def(service_type)
        own = {rname: truth.fraction(rname, profile) for rname in RESOURCES}
        names = list(truth.constraint_domains)
        domains = [constraint_domain(truth.constraint_domains[n]) for n in names]
        records: list[MetricsRecord] = []
        for combo in itertools.product(*domains):
            constraints = dict(zip(names, combo))
            for solo, raw_util, count in self._warmup_loads(own, profile):
                util = {r: min(1.0, raw_util[r]) for r in RESOURCES}
                peak = max(util.values())
                mean = sum(util.values()) / len(util)
                inflation = self._inflate(peak)
                metrics = {
                    "time": truth.base_time_ms * inflation,
                    "energy": profile.energy_base + profile.energy_slope * mean,
                }
                if "rate" in type_def.metric_grids:
                    metrics["rate"] = self._rate(truth, constraints,
                                                 metrics["time"], noise=1.0)
                record = make_record(-1, type_def, constraints, solo, util, metrics)
                records.extend([record] * count)
        return records

    def _warm_models(self) -> None:
        """Seed every registry with version-1 models from synthetic load sweeps."""
        device_types = {dev for _, dev in self.script.members}
        device_types |= {e.device for e in self.script.events if e.kind == "join"}
        for service_type in sorted(self.types):
            for device_type in sorted(device_types):
                cold = self.catalog.cold_model(service_type, device_type)
                model = parl_update(cold, self._warmup_records(service_type, device_type))
                for registry in self.registries.values():
                    registry.put_if_newer(model)

    # --- physics ---------------------------------------------------------------

    def _inflate(self, peak: float) -> float:
        p = self.params
        if peak <= p.theta:
            return 1.0
        denominator = 1.0 - p.contention_slope * (peak - p.theta)
        if denominator <= 0.0:
            return p.max_inflation
        return min(p.max_inflation, 1.0 / denominator)

    def _rate(self, truth: ServiceGroundTruth, constraints: Mapping[str, str],
              time_ms: float, noise: float) -> float:
        budget = 1000.0 / float(constraints["fps"])
        base = truth.rate_by_pixel[constraints["pixel"]]
        return min(1.0, max(0.0, base * min(1.0, budget / time_ms) * noise))

    def _perturbation_delta(self, vehicle_id: str, resource: str) -> float:
        return sum(
            p["delta"] for p in self.perturbations
            if p["vehicle"] == vehicle_id and p["resource"] == resource
            and p["from"] <= self.tick < p["until"]
        )

    def _physics(self) -> tuple[dict, dict]:
        """Per-instance records for this tick.

        Returns (authoritative, probes), each mapping service id to
        (vehicle id, record, raw float dict). Probe instances belong to
        in-flight graceful handovers and consume real capacity on the
        target while the source copy stays authoritative.
        """
        per_vehicle: dict[str, list[tuple[str, bool]]] = {
            vid: [] for vid in self.platoon.member_ids()
        }
        for sid, vid in self.assignments.items():
            per_vehicle[vid].append((sid, False))
        for sid in sorted(self.handovers):
            h = self.handovers[sid]
            if (h.outcome is HandoverOutcome.RUNNING and h.started_tick < self.tick
                    and h.target in self.platoon):
                per_vehicle[h.target].append((sid, True))

        noise_span = self.params.demand_noise
        rate_span = self.params.rate_noise
        authoritative: dict[str, tuple[str, MetricsRecord, dict]] = {}
        probes: dict[str, tuple[str, MetricsRecord, dict]] = {}
        for vid in sorted(per_vehicle):
            profile = self.devices[self.platoon.device_type(vid)]
            instances = sorted(per_vehicle[vid])
            draws: dict[tuple[str, bool], tuple[float, float]] = {}
            util = {rname: 0.0 for rname in RESOURCES}
            for key in instances:
                demand_noise = 1.0 + self.rng.uniform(-noise_span, noise_span)
                rate_noise = 1.0 + self.rng.uniform(-rate_span, rate_span)
                draws[key] = (demand_noise, rate_noise)
                truth = self.types[self.specs[key[0]].service_type]
                for rname in RESOURCES:
                    util[rname] += truth.fraction(rname, profile) * demand_noise
            for rname in RESOURCES:
                util[rname] += self._perturbation_delta(vid, rname)
                util[rname] = min(1.0, max(0.0, util[rname]))
            peak = max(util.values())
            mean = sum(util.values()) / len(util)
            inflation = self._inflate(peak)
            energy = profile.energy_base + profile.energy_slope * mean
            self.last_physics[vid] = {
                "util": dict(util), "inflation": inflation, "energy": energy,
                "instances": len(instances),
            }
            solo = SOLO_YES if len(instances) == 1 else SOLO_NO
            for key in instances:
                sid, is_probe = key
                spec = self.specs[sid]
                truth = self.types[spec.service_type]
                type_def = self.catalog.type_def(spec.service_type)
                time_ms = truth.base_time_ms * inflation
                metrics = {"time": time_ms, "energy": energy}
                if "rate" in type_def.metric_grids:
                    metrics["rate"] = self._rate(truth, spec.constraints, time_ms,
                                                 draws[key][1])
                record = make_record(self.tick, type_def, spec.constraints, solo,
                                     util, metrics)
                raw = {"cpu": util["cpu"], "gpu": util["gpu"], "memory": util["memory"],
                       "time_ms": time_ms, "energy_w": energy,
                       "rate": metrics.get("rate")}
                bucket = probes if is_probe else authoritative
                bucket[sid] = (vid, record, raw)
        return authoritative, probes

    # --- scripted events ---------------------------------------------------------

    def _start_service(self, event: ScenarioEvent) -> None:
        sid, host = event.service, event.host
        if sid in self.assignments:
            self._violation(f"service {sid!r} started while already running")
            return
        if host not in self.platoon:
            self._violation(f"service {sid!r} started on absent vehicle {host!r}")
            return
        self.assignments.assign(sid, host)
        self.states[sid] = WrapperState(service=self.specs[sid], vehicle_id=host,
                                        config=self.wrapper_cfg[sid])
        self._event("start_service", service=sid, vehicle=host)

    def _stop_service(self, event: ScenarioEvent) -> None:
        sid = event.service
        if sid not in self.assignments:
            self._violation(f"service {sid!r} stopped while not running")
            return
        if sid in self.handovers:
            h = self.handovers.pop(sid)
            self._event("handover_abort", service=sid, source=h.source, target=h.target,
                        detail="service stopped")
        host = self.assignments.host_of(sid)
        self.assignments.remove(sid)
        self.states.pop(sid, None)
        self._event("stop_service", service=sid, vehicle=host)

    def _join(self, event: ScenarioEvent) -> None:
        vid, device = event.vehicle, event.device
        self.platoon.join(Vehicle(id=vid, device_type=device))
        self.registries[vid] = ModelRegistry(self.catalog)
        leader = self.platoon.leader
        stored = self.registries[leader].stored()
        for model in stored:
            self._send(vid, ModelUpdate(sender=leader, model=model))
        self._event("join", vehicle=vid, detail=f"device={device} synced={len(stored)}")

    def _forced_reassign(self, sid: str, vid: str) -> None:
        """Best remaining host for a service whose vehicle is leaving.

        Unlike a voluntary offload this always moves: the argmax is
        taken even when every candidate loses fulfillment.
        """
        view = self.platoon.view(self.tick)
        evaluation = evaluate_offload(sid, vid, view, self.assignments,
                                      self.registries[self.platoon.leader],
                                      services=self.specs, profiles=self.devices)
        if not evaluation.candidates:
            self._violation(f"no host left for service {sid!r}")
            self.assignments.remove(sid)
            self.states.pop(sid, None)
            return
        best = sorted(evaluation.candidates, key=lambda c: (-c.gain, c.vehicle_id))[0]
        self.assignments.assign(sid, best.vehicle_id)
        self.states[sid] = fresh_state_after_move(self.states[sid], best.vehicle_id)
        self._event("offload_forced", service=sid, source=vid, target=best.vehicle_id,
                    gain=best.gain, infer_calls=evaluation.infer_calls)

    def _leave(self, event: ScenarioEvent) -> None:
        vid = event.vehicle
        if vid not in self.platoon:
            self._violation(f"leave for non-member {vid!r}")
            return
        if len(self.platoon) == 1:
            self._violation(f"last member {vid!r} cannot leave")
            return
        for sid in sorted(self.handovers):
            h = self.handovers[sid]
            if vid in (h.source, h.target):
                self.handovers.pop(sid)
                self._event("handover_abort", service=sid, source=h.source,
                            target=h.target, detail=f"{vid} left")
        if self.platoon.leader == vid:
            successor = min(m for m in self.platoon.member_ids() if m != vid)
            self.platoon.transfer_leader(successor)
            self._event("transfer_leader", vehicle=successor, detail="leader left")
        for sid in self.assignments.services_on(vid):
            self._forced_reassign(sid, vid)
        self.platoon.leave(vid)
        self.registries.pop(vid, None)
        self.last_physics.pop(vid, None)
        self._event("leave", vehicle=vid)

    def _apply_event(self, event: ScenarioEvent) -> None:
        if event.kind == "start_service":
            self._start_service(event)
        elif event.kind == "stop_service":
            self._stop_service(event)
        elif event.kind == "join":
            self._join(event)
        elif event.kind == "leave":
            self._leave(event)
        elif event.kind == "transfer_leader":
            self.platoon.transfer_leader(event.vehicle)
            self._event("transfer_leader", vehicle=event.vehicle)
        elif event.kind == "perturb":
            self.perturbations.append({
                "vehicle": event.vehicle, "resource": event.resource,
                "delta": event.delta, "from": event.tick,
                "until": event.tick + event.duration,
            })
            self._event("perturb", vehicle=event.vehicle,
                        detail=f"{event.resource}{event.delta:+g} for {event.duration}")

    # --- wrapper + messaging -----------------------------------------------------

    def _run_wrappers(self, authoritative: dict) -> None:
        view = self.platoon.view(self.tick)
        order = sorted(self.assignments.items(), key=lambda kv: (kv[1], kv[0]))
        for sid, vid in order:
            state = self.states[sid]
            _, record, raw = authoritative[sid]
            state, actions = wrapper_tick(
                state, record, view,
                models=self.registries[vid], assignments=self.assignments,
                services=self.specs, profiles=self.devices,
            )
            self.states[sid] = state
            trace = state.trace
            self.result.trace_rows.append({
                "tick": self.tick, "vehicle": vid, "service": sid,
                "cpu": raw["cpu"], "gpu": raw["gpu"], "memory": raw["memory"],
                "time_ms": raw["time_ms"], "energy_w": raw["energy_w"],
                "rate": raw["rate"],
                "phi": trace.phi, "window_mean": trace.window_mean,
                "p_phi": trace.p_phi, "e_retrain": trace.e_retrain,
                "e_offload": trace.e_offload, "action": trace.action,
            })
            if trace.evaluation is not None:
                ev = trace.evaluation
                cands = " ".join(f"{c.vehicle_id}:{c.gain!r}" for c in ev.candidates)
                self._event(
                    "offload_search", service=sid, vehicle=vid,
                    source=vid, target=ev.target or "",
                    detail=f"phi_set={ev.phi_source_before!r} cands=[{cands}]",
                    gain=ev.gain, infer_calls=ev.infer_calls,
                )
            for action in actions:
                if isinstance(action, RetrainAction):
                    self._send(view.leader, RetrainRequest(
                        sender=vid, service_id=action.service_id,
                        service_type=action.service_type,
                        device_type=action.device_type, records=action.records,
                    ))
                    self._event("retrain_request", service=sid, vehicle=vid,
                                target=view.leader,
                                detail=f"records={len(action.records)}")
                elif isinstance(action, OffloadAction):
                    self._send(action.target, OffloadRequest(
                        sender=vid, service_id=action.service_id,
                        source=action.source, target=action.target,
                    ))

    def _commit_handover(self, h: HandoverState) -> None:
        sid = h.service_id
        self.assignments.assign(sid, h.target)
        self.states[sid] = fresh_state_after_move(self.states[sid], h.target)
        self.handovers.pop(sid, None)
        self._event("handover_commit", service=sid, source=h.source, target=h.target,
                    detail=f"probes={len(h.probes)}")

    def _handle_retrain(self, recipient: str, msg: RetrainRequest) -> None:
        leader = self.platoon.leader
        if recipient != leader:
            self._send(leader, msg)
            self._event("retrain_forward", service=msg.service_id, vehicle=recipient,
                        target=leader)
            return
        vehicle = Vehicle(id=recipient, device_type=self.platoon.device_type(recipient),
                          is_leader=True)
        update = handle_retrain_request(vehicle, self.registries[recipient], msg,
                                        decay=self.params.decay)
        self._event("retrain", service=msg.service_id, vehicle=recipient,
                    version=update.model.version,
                    detail=f"{msg.service_type}@{msg.device_type}"
                           f" records={len(msg.records)}")
        for member in self.platoon.member_ids():
            self._send(member, ModelUpdate(sender=recipient, model=update.model))

    def _busy_vehicles(self) -> set[str]:
        """Vehicles tied up in a move that has been accepted or is running."""
        busy: set[str] = set()
        for h in self.handovers.values():
            busy.update((h.source, h.target))
        for sid, (source, target, accepted) in list(self.accepted_moves.items()):
            if self.tick - accepted > 2:
                del self.accepted_moves[sid]  # accept never arrived (member left)
                continue
            busy.update((source, target))
        return busy

    def _handle_offload_request(self, recipient: str, msg: OffloadRequest) -> None:
        valid = (msg.service_id in self.assignments
                 and self.assignments.host_of(msg.service_id) == msg.source
                 and msg.source in self.platoon)
        reason = None
        if not valid:
            reason = "stale request"
        elif {msg.source, msg.target} & self._busy_vehicles():
            # One move at a time per vehicle: concurrent approvals would let
            # several services pile onto the same host, each judged against a
            # set prediction that ignores the others.
            reason = "handover in flight"
        if reason is not None:
            self._event("offload_reject", service=msg.service_id, vehicle=recipient,
                        source=msg.source, target=msg.target, detail=reason)
            if msg.source in self.platoon:
                self._send(msg.source, OffloadReject(
                    sender=recipient, service_id=msg.service_id, source=msg.source,
                    target=msg.target, reason=reason,
                ))
            return
        self.accepted_moves[msg.service_id] = (msg.source, msg.target, self.tick)
        self._send(msg.source, OffloadAccept(sender=recipient, service_id=msg.service_id,
                                             source=msg.source, target=msg.target))

    def _handle_offload_accept(self, msg: OffloadAccept) -> None:
        sid = msg.service_id
        self.accepted_moves.pop(sid, None)
        still_valid = (sid in self.assignments
                       and self.assignments.host_of(sid) == msg.source
                       and msg.target in self.platoon
                       and sid not in self.handovers)
        if not still_valid:
            self._event("handover_abort", service=sid, source=msg.source,
                        target=msg.target, detail="acceptance arrived stale")
            return
        h = begin_handover(sid, msg.source, msg.target, self.tick, self.horizon,
                           commit_threshold=self.params.handover_commit_phi)
        if h.outcome is HandoverOutcome.COMMITTED:
            self._event("handover_begin", service=sid, source=msg.source,
                        target=msg.target, detail="atomic")
            self._commit_handover(h)
        else:
            self.handovers[sid] = h
            self._event("handover_begin", service=sid, source=msg.source,
                        target=msg.target, detail=f"horizon={self.horizon}")

    def _deliver_messages(self) -> None:
        due = [m for m in self.pending if m[0] <= self.tick]
        self.pending = [m for m in self.pending if m[0] > self.tick]
        for _, _, recipient, msg in sorted(due, key=lambda m: m[1]):
            if recipient not in self.platoon:
                self._event("message_dropped", vehicle=recipient,
                            detail=getattr(msg, "kind", "unknown"))
                continue
            if isinstance(msg, RetrainRequest):
                self._handle_retrain(recipient, msg)
            elif isinstance(msg, ModelUpdate):
                applied = apply_model_update(self.registries[recipient], msg)
                self._event("model_update", vehicle=recipient,
                            version=msg.model.version,
                            detail=f"{msg.model.service_type}@{msg.model.device_type}"
                                   f" {'applied' if applied else 'stale'}")
            elif isinstance(msg, OffloadRequest):
                self._handle_offload_request(recipient, msg)
            elif isinstance(msg, OffloadAccept):
                self._handle_offload_accept(msg)
            elif isinstance(msg, OffloadReject):
                self._event("offload_rejected", service=msg.service_id,
                            vehicle=recipient, detail=msg.reason)

    def _advance_handovers(self, probes: dict) -> None:
        for sid in sorted(self.handovers):
            h = self.handovers[sid]
            if h.started_tick >= self.tick:
                continue  # accepted this tick; first parallel run is next tick
            if h.target not in self.platoon or sid not in self.assignments:
                self.handovers.pop(sid)
                self._event("handover_abort", service=sid, source=h.source,
                            target=h.target, detail="participant disappeared")
                continue
            entry = probes.get(sid)
            if entry is None:
                continue
            _, record, _ = entry
            spec = self.specs[sid]
            profile = self.devices[self.platoon.device_type(h.target)]
            slos = effective_slos(spec, profile.member_energy_limit,
                                  profile.leader_energy_limit,
                                  self.platoon.leader == h.target)
            phi = set_fulfillment(slos, [record])
            outcome = handover_tick(h, phi)
            self._event("handover_probe", service=sid, source=h.source, target=h.target,
                        detail=str(phi))
            if outcome is HandoverOutcome.COMMITTED:
                self._commit_handover(h)
            elif outcome is HandoverOutcome.ABORTED:
                self.handovers.pop(sid)
                state = self.states[sid]
                state.cooldown_remaining = state.config.cooldown_ticks
                self._event("handover_abort", service=sid, source=h.source,
                            target=h.target, detail=f"probe_mean={h.probe_mean}")

    # --- invariants ----------------------------------------------------------------

    def _check_invariants(self) -> None:
        for sid, vid in self.assignments.items():
            if vid not in self.platoon:
                self._violation(f"service {sid!r} assigned to absent vehicle {vid!r}")
        for sid, state in self.states.items():
            if len(state.window) > state.config.window_size:
                self._violation(f"window overflow for {sid!r}")
            if len(state.buffer) > state.config.buffer_capacity:
                self._violation(f"buffer overflow for {sid!r}")
        self._event("tick", detail=f"members={len(self.platoon)}"
                                   f" services={len(self.assignments)}")

    # --- main loop -------------------------------------------------------------------

    def step(self) -> None:
        self.tick += 1
        if self.tick == 0:
            for event in self._implicit_starts:
                self._apply_event(event)
        for event in self.script.events:
            if event.tick == self.tick:
                self._apply_event(event)
        authoritative, probes = self._physics()
        self._run_wrappers(authoritative)
        self._deliver_messages()
        self._advance_handovers(probes)
        self._check_invariants()

    def run(self, tick_limit: int | None = None) -> RunResult:
        if self._ran:
            raise PlatoonSimError("a world can only run once")
        self._ran = True
        ticks = self.script.duration_ticks
        if tick_limit is not None:
            ticks = min(ticks, tick_limit)
        for _ in range(ticks):
            self.step()
        self.result.ticks = ticks
        return self.result


def inject_perturbation(world: World, vehicle: str, resource: str, delta: float,
                        duration: int, start_tick: int | None = None) -> None:
    """Add resource pressure outside the script (takes effect on its start tick)."""
    if resource not in RESOURCES:
        raise PlatoonSimError(f"unknown resource {resource!r}")
    begin = world.tick + 1 if start_tick is None else start_tick
    world.perturbations.append({
        "vehicle": vehicle, "resource": resource, "delta": delta,
        "from": begin, "until": begin + duration,
    })


def run_scenario(script: ScenarioScript, *, out_dir: str | Path | None = None,
                 seed: int | None = None, tick_limit: int | None = None,
                 handover_ticks: int | None = None) -> RunResult:
    """Run one scenario end to end, optionally writing the CSV/manifest set."""
    world = World(script, seed=seed, handover_ticks=handover_ticks)
    result = world.run(tick_limit=tick_limit)
    if out_dir is not None:
        result.write(out_dir)
    return result
