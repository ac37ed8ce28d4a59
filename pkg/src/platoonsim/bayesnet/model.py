"""SLO-I models: per (service type, device type) belief about fulfillment."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..errors import RecordSchemaMismatchError
from ..slo_core import MetricsRecord
from .cpt import Cpt
from .structure import NetworkStructure


@dataclass
class SloIModel:
    """A trained (or fresh) network for one service type on one device type.

    The structure never changes after construction; parameter-only
    relearning replaces counts and bumps the version.
    """

    service_type: str
    device_type: str
    structure: NetworkStructure
    cpts: dict[str, Cpt] = field(default_factory=dict)
    version: int = 0

    def cpt(self, name: str) -> Cpt:
        return self.cpts[name]

    def copy(self) -> "SloIModel":
        return SloIModel(
            service_type=self.service_type,
            device_type=self.device_type,
            structure=self.structure,
            cpts={name: c.copy() for name, c in self.cpts.items()},
            version=self.version,
        )


def build_model(structure: NetworkStructure, service_type: str, device_type: str,
                alpha: float = 1.0) -> SloIModel:
    """Fresh model at version 0: every CPT holds alpha in each cell."""
    cpts: dict[str, Cpt] = {}
    for spec in structure.variables:
        parents = structure.parents(spec.name)
        shape = tuple(structure.variable(p).cardinality for p in parents) + (spec.cardinality,)
        cpts[spec.name] = Cpt.fresh(spec.name, parents, shape, alpha=alpha)
    return SloIModel(service_type=service_type, device_type=device_type,
                     structure=structure, cpts=cpts, version=0)


def _state_indices(model: SloIModel, record: MetricsRecord) -> dict[str, int]:
    indices: dict[str, int] = {}
    for spec in model.structure.variables:
        obs = record.values.get(spec.name)
        if obs is None:
            raise RecordSchemaMismatchError(
                f"record at tick {record.tick} lacks variable {spec.name!r}")
        if obs.bin not in spec.states:
            raise RecordSchemaMismatchError(
                f"record at tick {record.tick}: {obs.bin!r} is not a state of {spec.name!r}")
        indices[spec.name] = spec.states.index(obs.bin)
    return indices


def parl_update(model: SloIModel, records: Iterable[MetricsRecord],
                decay: float = 1.0) -> SloIModel:
    """Parameter-only relearning from a batch of records.

    Returns a new model with version + 1. The batch tally is added to
    the (optionally decayed) observed counts; an empty batch still bumps
    the version and, with decay 1.0, leaves probabilities untouched.
    """
    updated = model.copy()
    tallies = {name: np.zeros_like(c.counts) for name, c in updated.cpts.items()}
    for record in records:
        indices = _state_indices(updated, record)
        for name, cpt in updated.cpts.items():
            cell = tuple(indices[p] for p in cpt.parents) + (indices[name],)
            tallies[name][cell] += 1.0
    for name, cpt in updated.cpts.items():
        cpt.absorb(tallies[name], decay=decay)
    updated.version = model.version + 1
    return updated
