"""Platoon membership, model registries, and the coordination messages.

Retraining is centralized: wrappers send their buffered records to the
leader, the leader relearns the (service type, device type) model and
broadcasts the new version to every member. Registries apply updates
idempotently and only ever move forward in version.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .bayesnet.model import SloIModel, parl_update
from .errors import DuplicateIdError, NotLeaderError, PlatoonSimError, UnknownIdError
from .slo_core import MetricsRecord
from .templates import ModelCatalog


@dataclass(frozen=True)
class Vehicle:
    id: str
    device_type: str
    is_leader: bool = False


@dataclass(frozen=True)
class PlatoonView:
    """Membership snapshot a wrapper sees for one tick."""

    members: tuple[Vehicle, ...]
    leader: str
    tick: int

    def member_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.members)

    def member(self, vehicle_id: str) -> Vehicle:
        for vehicle in self.members:
            if vehicle.id == vehicle_id:
                return vehicle
        raise UnknownIdError(f"no platoon member {vehicle_id!r}")


class Platoon:
    """Mutable membership state; hands out immutable views."""

    def __init__(self, members: Iterable[Vehicle], leader: str):
        self._members: dict[str, str] = {}
        for vehicle in members:
            if vehicle.id in self._members:
                raise DuplicateIdError(f"vehicle {vehicle.id!r} joined twice")
            self._members[vehicle.id] = vehicle.device_type
        if leader not in self._members:
            raise UnknownIdError(f"leader {leader!r} is not a member")
        self.leader = leader

    def member_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._members))

    def device_type(self, vehicle_id: str) -> str:
        try:
            return self._members[vehicle_id]
        except KeyError:
            raise UnknownIdError(f"no platoon member {vehicle_id!r}") from None

    def __contains__(self, vehicle_id: str) -> bool:
        return vehicle_id in self._members

    def __len__(self) -> int:
        return len(self._members)

    def join(self, vehicle: Vehicle) -> None:
        if vehicle.id in self._members:
            raise DuplicateIdError(f"vehicle {vehicle.id!r} is already a member")
        self._members[vehicle.id] = vehicle.device_type

    def leave(self, vehicle_id: str) -> None:
        if vehicle_id not in self._members:
            raise UnknownIdError(f"no platoon member {vehicle_id!r}")
        if len(self._members) == 1:
            raise PlatoonSimError("the last member cannot leave; a platoon is never empty")
        if vehicle_id == self.leader:
            raise PlatoonSimError(f"leader {vehicle_id!r} must transfer leadership before leaving")
        del self._members[vehicle_id]

    def transfer_leader(self, vehicle_id: str) -> None:
        if vehicle_id not in self._members:
            raise UnknownIdError(f"cannot lead from outside the platoon: {vehicle_id!r}")
        self.leader = vehicle_id

    def view(self, tick: int) -> PlatoonView:
        members = tuple(
            Vehicle(id=vid, device_type=self._members[vid], is_leader=vid == self.leader)
            for vid in sorted(self._members)
        )
        return PlatoonView(members=members, leader=self.leader, tick=tick)


class AssignmentMap:
    """Authoritative service placement: each service runs on exactly one vehicle."""

    def __init__(self, assignments: dict[str, str] | None = None):
        self._map: dict[str, str] = dict(assignments or {})

    def assign(self, service_id: str, vehicle_id: str) -> None:
        self._map[service_id] = vehicle_id

    def remove(self, service_id: str) -> None:
        self._map.pop(service_id, None)

    def host_of(self, service_id: str) -> str:
        try:
            return self._map[service_id]
        except KeyError:
            raise UnknownIdError(f"service {service_id!r} is not assigned") from None

    def services_on(self, vehicle_id: str) -> tuple[str, ...]:
        return tuple(sorted(s for s, v in self._map.items() if v == vehicle_id))

    def items(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self._map.items()))

    def __contains__(self, service_id: str) -> bool:
        return service_id in self._map

    def __len__(self) -> int:
        return len(self._map)

    def copy(self) -> "AssignmentMap":
        return AssignmentMap(dict(self._map))

    def as_dict(self) -> dict[str, str]:
        return dict(self._map)


class ModelRegistry:
    """Per-vehicle store of replicated models, keyed (service type, device type).

    Stored entries only ever advance in version. Lookups for keys nobody
    has trained yet fall back to a deterministic cold-started model that
    is cached locally but never written into the replicated store.
    """

    def __init__(self, catalog: ModelCatalog):
        self.catalog = catalog
        self._models: dict[tuple[str, str], SloIModel] = {}
        self._cold: dict[tuple[str, str], SloIModel] = {}

    def get(self, service_type: str, device_type: str) -> SloIModel | None:
        return self._models.get((service_type, device_type))

    def lookup(self, service_type: str, device_type: str) -> SloIModel:
        stored = self._models.get((service_type, device_type))
        if stored is not None:
            return stored
        key = (service_type, device_type)
        if key not in self._cold:
            self._cold[key] = self.catalog.cold_model(service_type, device_type)
        return self._cold[key]

    def put_if_newer(self, model: SloIModel) -> bool:
        key = (model.service_type, model.device_type)
        current = self._models.get(key)
        if current is not None and model.version <= current.version:
            return False
        self._models[key] = model
        return True

    def version_map(self) -> dict[tuple[str, str], int]:
        return {key: model.version for key, model in sorted(self._models.items())}

    def stored(self) -> tuple[SloIModel, ...]:
        return tuple(self._models[key] for key in sorted(self._models))


# --- Protocol messages ------------------------------------------------------

@dataclass(frozen=True)
class RetrainRequest:
    kind = "retrain_request"
    sender: str
    service_id: str
    service_type: str
    device_type: str
    records: tuple[MetricsRecord, ...]


@dataclass(frozen=True)
class ModelUpdate:
    kind = "model_update"
    sender: str
    model: SloIModel


@dataclass(frozen=True)
class OffloadRequest:
    kind = "offload_request"
    sender: str
    service_id: str
    source: str
    target: str


@dataclass(frozen=True)
class OffloadAccept:
    kind = "offload_accept"
    sender: str
    service_id: str
    source: str
    target: str


@dataclass(frozen=True)
class OffloadReject:
    kind = "offload_reject"
    sender: str
    service_id: str
    source: str
    target: str
    reason: str = ""


@dataclass(frozen=True)
class JoinAnnounce:
    kind = "join_announce"
    sender: str
    device_type: str


@dataclass(frozen=True)
class LeaveAnnounce:
    kind = "leave_announce"
    sender: str


@dataclass(frozen=True)
class LeaderTransfer:
    kind = "leader_transfer"
    sender: str
    new_leader: str


ProtocolMessage = (
    RetrainRequest | ModelUpdate | OffloadRequest | OffloadAccept
    | OffloadReject | JoinAnnounce | LeaveAnnounce | LeaderTransfer
)


def handle_retrain_request(vehicle: Vehicle, registry: ModelRegistry,
                           request: RetrainRequest, decay: float = 1.0) -> ModelUpdate:
    """Leader-side relearning; returns the update to broadcast.

    The handler must run on the current leader; anything else is a
    protocol violation surfaced as NotLeader.
    """
    if not vehicle.is_leader:
        raise NotLeaderError(f"{vehicle.id!r} received a retrain request but is not the leader")
    model = registry.lookup(request.service_type, request.device_type)
    updated = parl_update(model, request.records, decay=decay)
    registry.put_if_newer(updated)
    return ModelUpdate(sender=vehicle.id, model=updated)


def apply_model_update(registry: ModelRegistry, update: ModelUpdate) -> bool:
    """Apply a broadcast model; stale or duplicate versions are dropped."""
    return registry.put_if_newer(update.model)
