"""Brute-force baselines for the offload search.

Both oracles score placements globally: the platoon's score is the mean
over members of the predicted set fulfillment of each member's service
set. exhaustive_assignment enumerates every placement of every service;
single_move_argmax re-scores each single-service move the way the live
search would encounter it, but by full global evaluation instead of the
incremental gain formula.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

from .errors import SearchSpaceTooLargeError, UnknownIdError
from .offload import predict_set_fulfillment
from .platoon import AssignmentMap, ModelRegistry, PlatoonView
from .wrapper import ServiceSpec

ENUMERATION_LIMIT = 10 ** 6


class _SetScoreCache:
    """Memoized per-vehicle set scores so symmetric placements tie exactly."""

    def __init__(self, platoon: PlatoonView, models: ModelRegistry,
                 services: Mapping[str, ServiceSpec], profiles: Mapping[str, object]):
        self.platoon = platoon
        self.models = models
        self.services = services
        self.profiles = profiles
        self._cache: dict[tuple[str, frozenset], float] = {}

    def score(self, vehicle_id: str, service_ids: frozenset) -> float:
        key = (vehicle_id, service_ids)
        if key not in self._cache:
            member = self.platoon.member(vehicle_id)
            self._cache[key] = predict_set_fulfillment(
                sorted(service_ids), member.device_type, member.is_leader,
                self.models, self.services, self.profiles)
        return self._cache[key]

    def global_score(self, placement: Mapping[str, str]) -> float:
        per_vehicle = []
        for vehicle in sorted(self.platoon.members, key=lambda m: m.id):
            assigned = frozenset(s for s, v in placement.items() if v == vehicle.id)
            per_vehicle.append(self.score(vehicle.id, assigned))
        return math.fsum(per_vehicle) / len(per_vehicle)


@dataclass(frozen=True)
class AssignmentScore:
    placement: tuple[tuple[str, str], ...]
    score: float


@dataclass(frozen=True)
class ExhaustiveResult:
    best: AssignmentScore
    enumerated: int
    scores: tuple[AssignmentScore, ...]


def exhaustive_assignment(platoon: PlatoonView, assignments: AssignmentMap,
                          models: ModelRegistry, *, services: Mapping[str, ServiceSpec],
                          profiles: Mapping[str, object],
                          limit: int = ENUMERATION_LIMIT,
                          keep_scores: bool = True) -> ExhaustiveResult:
    """Score every assignment of the currently placed services.

    Raises SearchSpaceTooLarge when members^services exceeds the limit.
    Ties resolve to the enumeration-first placement, which is the
    lexicographically smallest in (service id, vehicle id) order.
    """
    service_ids = sorted(s for s, _ in assignments.items())
    vehicle_ids = sorted(v.id for v in platoon.members)
    count = len(vehicle_ids) ** len(service_ids)
    if count > limit:
        raise SearchSpaceTooLargeError(
            f"{len(vehicle_ids)}^{len(service_ids)} = {count} placements exceed limit {limit}")
    cache = _SetScoreCache(platoon, models, services, profiles)
    best: AssignmentScore | None = None
    collected: list[AssignmentScore] = []
    for combo in itertools.product(vehicle_ids, repeat=len(service_ids)):
        placement = dict(zip(service_ids, combo))
        scored = AssignmentScore(placement=tuple(sorted(placement.items())),
                                 score=cache.global_score(placement))
        if keep_scores:
            collected.append(scored)
        if best is None or scored.score > best.score:
            best = scored
    assert best is not None
    return ExhaustiveResult(best=best, enumerated=count, scores=tuple(collected))


@dataclass(frozen=True)
class SingleMoveResult:
    service_id: str
    source: str
    target: str | None
    gain: float
    score_before: float
    score_after: float


def single_move_argmax(service_id: str, platoon: PlatoonView, assignments: AssignmentMap,
                       models: ModelRegistry, *, services: Mapping[str, ServiceSpec],
                       profiles: Mapping[str, object]) -> SingleMoveResult:
    """Best single move of one service, by re-scoring the whole platoon.

    The gain is reported on the same scale as the live search's gamma:
    global score delta times the member count. Target is None when no
    move strictly improves the global score; ties prefer the lowest
    vehicle id.
    """
    source = assignments.host_of(service_id)
    if source not in {v.id for v in platoon.members}:
        raise UnknownIdError(f"source {source!r} is not a platoon member")
    cache = _SetScoreCache(platoon, models, services, profiles)
    baseline = dict(assignments.items())
    score_before = cache.global_score(baseline)

    best_target: str | None = None
    best_score = score_before
    for vehicle in sorted(platoon.members, key=lambda m: m.id):
        if vehicle.id == source:
            continue
        moved = dict(baseline)
        moved[service_id] = vehicle.id
        score = cache.global_score(moved)
        if score > best_score:
            best_score = score
            best_target = vehicle.id

    members = len(platoon.members)
    return SingleMoveResult(
        service_id=service_id, source=source, target=best_target,
        gain=(best_score - score_before) * members,
        score_before=score_before, score_after=best_score,
    )
