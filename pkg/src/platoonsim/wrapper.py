"""The service wrapper: one decision loop per service instance per tick.

Every tick the wrapper records its metrics, predicts fulfillment with
the current model, and derives two evidence scores: retraining evidence
(prediction error plus buffer occupancy) and offload evidence
(prediction error plus observed shortfall). Crossing rho requests a
collaborative retrain; crossing omega starts a search for a better host.
Both can fire in the same tick, retraining first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Mapping

from .bayesnet.inference import infer_slo
from .platoon import ModelRegistry, PlatoonView
from .slo_core import (
    MetricsBuffer,
    MetricsRecord,
    SlidingWindow,
    Slo,
    SloSet,
    buffer_full,
    set_fulfillment,
    window_mean,
)

if TYPE_CHECKING:
    from .offload import OffloadEvaluation
    from .platoon import AssignmentMap

ENERGY_METRIC = "energy"


@dataclass(frozen=True)
class ServiceSpec:
    """Identity, constraints C, and SLO set Q of one service instance.

    The energy bound tracks the host's role when energy_tracks_role is
    set: the stored SLO carries the member limit and effective_slos
    swaps in the leader limit while the host leads the platoon.
    """

    id: str
    service_type: str
    constraints: Mapping[str, str]
    slos: SloSet
    energy_tracks_role: bool = True


def effective_slos(spec: ServiceSpec, member_energy_limit: float,
                   leader_energy_limit: float, is_leader: bool) -> SloSet:
    """The SLO set as it binds on a concrete host right now."""
    if not spec.energy_tracks_role:
        return spec.slos
    limit = leader_energy_limit if is_leader else member_energy_limit
    out = []
    for slo in spec.slos:
        if slo.metric == ENERGY_METRIC and math.isfinite(slo.max):
            out.append(Slo(metric=slo.metric, min=slo.min, max=limit))
        else:
            out.append(slo)
    return SloSet(slos=tuple(out))


@dataclass(frozen=True)
class WrapperConfig:
    rho: float = 1.0
    omega: float = 0.8
    window_size: int = 10
    buffer_capacity: int = 100
    cooldown_ticks: int = 20
    retrain_mode: str = "adaptive"  # or "interval"
    retrain_interval: int = 100

    def __post_init__(self):
        if self.retrain_mode not in ("adaptive", "interval"):
            raise ValueError(f"unknown retrain mode {self.retrain_mode!r}")


@dataclass
class WrapperTrace:
    """Numbers produced by the latest tick, for the trace writer."""

    phi: float = math.nan
    window_mean: float = math.nan
    p_phi: float = math.nan
    e_retrain: float = math.nan
    e_offload: float = math.nan
    action: str = ""
    evaluation: "OffloadEvaluation | None" = None


@dataclass
class WrapperState:
    service: ServiceSpec
    vehicle_id: str
    config: WrapperConfig = field(default_factory=WrapperConfig)
    window: SlidingWindow = field(default=None)  # type: ignore[assignment]
    buffer: MetricsBuffer = field(default=None)  # type: ignore[assignment]
    cooldown_remaining: int = 0
    ticks_since_retrain: int = 0
    trace: WrapperTrace = field(default_factory=WrapperTrace)

    def __post_init__(self):
        if self.window is None:
            self.window = SlidingWindow(capacity=self.config.window_size)
        if self.buffer is None:
            self.buffer = MetricsBuffer(capacity=self.config.buffer_capacity)


@dataclass(frozen=True)
class RetrainAction:
    kind = "retrain_request"
    service_id: str
    service_type: str
    device_type: str
    records: tuple[MetricsRecord, ...]


@dataclass(frozen=True)
class OffloadAction:
    kind = "offload"
    service_id: str
    source: str
    target: str
    gain: float


WrapperAction = RetrainAction | OffloadAction


def evidence_retrain(window_mean_value: float, p_phi: float, occupancy: float) -> float:
    """e_r: prediction error plus buffer occupancy."""
    return abs(window_mean_value - p_phi) + occupancy


def evidence_offload(window_mean_value: float, p_phi: float) -> float:
    """e_o: prediction error plus the gap to full fulfillment."""
    return abs(window_mean_value - p_phi) + (1.0 - window_mean_value)


def _wants_retrain(state: WrapperState, e_r: float) -> bool:
    if state.config.retrain_mode == "adaptive":
        return e_r > state.config.rho
    return (state.ticks_since_retrain >= state.config.retrain_interval
            and len(state.buffer) > 0)


def wrapper_tick(state: WrapperState, record: MetricsRecord, platoon_view: PlatoonView,
                 *, models: ModelRegistry, assignments: "AssignmentMap",
                 services: Mapping[str, ServiceSpec], profiles: Mapping[str, object],
                 ) -> tuple[WrapperState, list[WrapperAction]]:
    """One pass of the wrapper loop. Mutates and returns the state.

    profiles maps device type to an object with member_energy_limit and
    leader_energy_limit; it feeds both the local SLO resolution and the
    candidate evaluation inside the offload search.
    """
    from .offload import evaluate_offload  # deferred: offload imports our types

    host = platoon_view.member(state.vehicle_id)
    profile = profiles[host.device_type]
    slos = effective_slos(state.service, profile.member_energy_limit,
                          profile.leader_energy_limit, host.is_leader)

    model = models.lookup(state.service.service_type, host.device_type)
    state.buffer.append(record)
    p_phi = infer_slo(model, slos, state.service.constraints)
    phi = set_fulfillment(slos, [record])
    state.window.push(phi)
    mean_w = window_mean(state.window)

    if state.cooldown_remaining > 0:
        state.cooldown_remaining -= 1
    state.ticks_since_retrain += 1

    actions: list[WrapperAction] = []
    trace = WrapperTrace(phi=phi, window_mean=mean_w, p_phi=p_phi)

    e_r = evidence_retrain(mean_w, p_phi, buffer_full(state.buffer))
    trace.e_retrain = e_r
    if _wants_retrain(state, e_r):
        batch = tuple(state.buffer.drain())
        actions.append(RetrainAction(
            service_id=state.service.id,
            service_type=state.service.service_type,
            device_type=host.device_type,
            records=batch,
        ))
        state.ticks_since_retrain = 0
        trace.action = "retrain_request"

    e_o = evidence_offload(mean_w, p_phi)
    trace.e_offload = e_o
    if e_o > state.config.omega and state.cooldown_remaining == 0:
        evaluation = evaluate_offload(
            state.service.id, state.vehicle_id, platoon_view, assignments, models,
            services=services, profiles=profiles,
        )
        trace.evaluation = evaluation
        if evaluation.target is not None:
            actions.append(OffloadAction(
                service_id=state.service.id,
                source=state.vehicle_id,
                target=evaluation.target,
                gain=evaluation.gain,
            ))
            state.cooldown_remaining = state.config.cooldown_ticks
            trace.action = (trace.action + "+offload") if trace.action else "offload"

    state.trace = trace
    return state, actions


def fresh_state_after_move(state: WrapperState, target: str) -> WrapperState:
    """Wrapper state for a service that just committed to a new host.

    History windows and buffered records describe the old device, so the
    new host starts clean, protected by the post-handover cooldown.
    """
    spec = state.service
    return WrapperState(
        service=replace(spec),
        vehicle_id=target,
        config=state.config,
        cooldown_remaining=state.config.cooldown_ticks,
    )
