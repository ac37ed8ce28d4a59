"""Offload target search and the graceful handover state machine.

The search scores each other platoon member by the gain
gamma = (phi_S' + phi_Sigma') - (phi_S + phi_Sigma): the predicted set
fulfillment of the source without the service plus the candidate with
it, against the status quo. Predictions convolve the involved services'
hardware footprints and condition each service's model on the summed
load. A move is proposed only for strictly positive gain; ties go to
the lowest vehicle id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .bayesnet.inference import infer_slo
from .errors import UnknownIdError
from .hwconv import conv_hw
from .platoon import AssignmentMap, ModelRegistry, PlatoonView
from .templates import ISOLATION_EVIDENCE
from .wrapper import ServiceSpec, effective_slos


def predict_set_fulfillment(service_ids: Sequence[str], device_type: str, is_leader: bool,
                            models: ModelRegistry, services: Mapping[str, ServiceSpec],
                            profiles: Mapping[str, object]) -> float:
    """Predicted mean fulfillment if exactly these services share a device.

    One set-evaluation: convolve the members' footprints, then condition
    each service's model on the predicted total. An empty set is
    trivially fulfilled.
    """
    ids = sorted(service_ids)
    if not ids:
        return 1.0
    specs = [services[sid] for sid in ids]
    profile = profiles[device_type]
    load = conv_hw(specs, device_type, models, isolation_evidence=ISOLATION_EVIDENCE)
    total = 0.0
    for spec in specs:
        slos = effective_slos(spec, profile.member_energy_limit,
                              profile.leader_energy_limit, is_leader)
        model = models.lookup(spec.service_type, device_type)
        total += infer_slo(model, slos, spec.constraints, soft=load)
    return total / len(ids)


@dataclass(frozen=True)
class OffloadGain:
    """One candidate's score in an offload search."""

    vehicle_id: str
    gain: float
    phi_candidate_before: float
    phi_candidate_after: float


@dataclass(frozen=True)
class OffloadEvaluation:
    """Everything a search computed: per-candidate gains and the verdict."""

    service_id: str
    source: str
    phi_source_before: float
    phi_source_after: float
    candidates: tuple[OffloadGain, ...]
    target: str | None
    gain: float
    infer_calls: int


def evaluate_offload(service_id: str, vehicle_id: str, platoon: PlatoonView,
                     assignments: AssignmentMap, models: ModelRegistry, *,
                     services: Mapping[str, ServiceSpec],
                     profiles: Mapping[str, object]) -> OffloadEvaluation:
    """Score every other member as a new host for the service.

    Runs exactly two set-evaluations for the source plus two per other
    member, platoon size permitting no shortcut: the source sets are
    evaluated even in a single-member platoon (where the verdict is
    necessarily "stay").
    """
    if assignments.host_of(service_id) != vehicle_id:
        raise UnknownIdError(
            f"service {service_id!r} is not assigned to vehicle {vehicle_id!r}")
    source = platoon.member(vehicle_id)
    source_set = assignments.services_on(vehicle_id)
    reduced = tuple(s for s in source_set if s != service_id)

    calls = 0

    def predict(ids: Sequence[str], device_type: str, leader: bool) -> float:
        nonlocal calls
        calls += 1
        return predict_set_fulfillment(ids, device_type, leader, models, services, profiles)

    phi_source = predict(source_set, source.device_type, source.is_leader)
    phi_source_after = predict(reduced, source.device_type, source.is_leader)

    candidates: list[OffloadGain] = []
    best_target: str | None = None
    best_gain = -math.inf
    for member in sorted(platoon.members, key=lambda m: m.id):
        if member.id == vehicle_id:
            continue
        current = assignments.services_on(member.id)
        phi_before = predict(current, member.device_type, member.is_leader)
        phi_after = predict(current + (service_id,), member.device_type, member.is_leader)
        gain = (phi_source_after + phi_after) - (phi_source + phi_before)
        candidates.append(OffloadGain(
            vehicle_id=member.id, gain=gain,
            phi_candidate_before=phi_before, phi_candidate_after=phi_after,
        ))
        if gain > best_gain:
            best_gain = gain
            best_target = member.id

    if not candidates or best_gain <= 0.0:
        return OffloadEvaluation(
            service_id=service_id, source=vehicle_id,
            phi_source_before=phi_source, phi_source_after=phi_source_after,
            candidates=tuple(candidates), target=None,
            gain=best_gain if candidates else 0.0, infer_calls=calls,
        )
    return OffloadEvaluation(
        service_id=service_id, source=vehicle_id,
        phi_source_before=phi_source, phi_source_after=phi_source_after,
        candidates=tuple(candidates), target=best_target,
        gain=best_gain, infer_calls=calls,
    )


def find_offload(service_id: str, vehicle_id: str, platoon: PlatoonView,
                 assignments: AssignmentMap, models: ModelRegistry, *,
                 services: Mapping[str, ServiceSpec],
                 profiles: Mapping[str, object]) -> str | None:
    """The new host for the service, or None when staying is best."""
    evaluation = evaluate_offload(service_id, vehicle_id, platoon, assignments, models,
                                  services=services, profiles=profiles)
    return evaluation.target


# --- Graceful handover -------------------------------------------------------

class HandoverOutcome(Enum):
    RUNNING = "running"
    COMMITTED = "committed"
    ABORTED = "aborted"


@dataclass
class HandoverState:
    """A service running on source and target in parallel, under probation.

    horizon = 0 is the atomic mode: the move commits the moment it
    begins, with no parallel phase.
    """

    service_id: str
    source: str
    target: str
    started_tick: int
    horizon: int
    commit_threshold: float = 0.9
    probes: list[float] = field(default_factory=list)
    outcome: HandoverOutcome = HandoverOutcome.RUNNING

    @property
    def probe_mean(self) -> float:
        return sum(self.probes) / len(self.probes) if self.probes else math.nan


def begin_handover(service_id: str, source: str, target: str, tick: int,
                   horizon: int, commit_threshold: float = 0.9) -> HandoverState:
    """Start a handover after the target accepted the offload request."""
    if source == target:
        raise ValueError("handover target equals the source")
    if horizon < 0:
        raise ValueError("handover horizon must be nonnegative")
    state = HandoverState(service_id=service_id, source=source, target=target,
                          started_tick=tick, horizon=horizon,
                          commit_threshold=commit_threshold)
    if horizon == 0:
        state.outcome = HandoverOutcome.COMMITTED
    return state


def handover_tick(state: HandoverState, target_phi: float) -> HandoverOutcome:
    """Record one parallel-run fulfillment value and resolve if due.

    After horizon probes the move commits iff their mean reaches the
    commit threshold (inclusive); otherwise it aborts and the service
    stays at the source.
    """
    if state.outcome is not HandoverOutcome.RUNNING:
        return state.outcome
    state.probes.append(float(target_phi))
    if len(state.probes) >= state.horizon:
        if state.probe_mean >= state.commit_threshold:
            state.outcome = HandoverOutcome.COMMITTED
        else:
            state.outcome = HandoverOutcome.ABORTED
    return state.outcome
