"""Default expert structure for SLO-I models.

Constraints (plus a solo-execution indicator) drive the hardware
variables; all three hardware variables drive every metric. The solo
flag lets footprint queries condition on ticks where the host ran a
single instance, which keeps convolved load predictions from
double-counting co-located history.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .bayesnet.model import SloIModel, build_model
from .bayesnet.structure import HW_VARIABLES, NetworkStructure, VariableSpec
from .bins import Binning, hardware_grid

SOLO_VARIABLE = "solo"
SOLO_YES = "yes"
SOLO_NO = "no"

ISOLATION_EVIDENCE = {SOLO_VARIABLE: SOLO_YES}


@dataclass(frozen=True)
class ServiceTypeDef:
    """Everything needed to build and feed models for one service type."""

    name: str
    constraint_domains: Mapping[str, tuple[str, ...]]
    metric_grids: Mapping[str, Binning]
    hw_grid: Binning

    def metric_names(self) -> tuple[str, ...]:
        return tuple(self.metric_grids)

    def structure(self) -> NetworkStructure:
        variables: list[VariableSpec] = []
        for cname, domain in self.constraint_domains.items():
            variables.append(VariableSpec(name=cname, states=tuple(domain), role="constraint"))
        variables.append(VariableSpec(name=SOLO_VARIABLE, states=(SOLO_YES, SOLO_NO),
                                      role="constraint"))
        for hname in HW_VARIABLES:
            variables.append(VariableSpec(name=hname, states=self.hw_grid.labels,
                                          role="hardware", edges=self.hw_grid.edges))
        for mname, grid in self.metric_grids.items():
            variables.append(VariableSpec(name=mname, states=grid.labels,
                                          role="metric", edges=grid.edges))
        constraint_names = list(self.constraint_domains) + [SOLO_VARIABLE]
        edges: list[tuple[str, str]] = []
        for cname in constraint_names:
            for hname in HW_VARIABLES:
                edges.append((cname, hname))
        for hname in HW_VARIABLES:
            for mname in self.metric_grids:
                edges.append((hname, mname))
        return NetworkStructure(variables=tuple(variables), edges=tuple(edges))


class ModelCatalog:
    """Builds cold models on demand; structures are shared per service type."""

    def __init__(self, types: Mapping[str, ServiceTypeDef]):
        self.types = dict(types)
        self._structures: dict[str, NetworkStructure] = {}

    def type_def(self, service_type: str) -> ServiceTypeDef:
        return self.types[service_type]

    def structure(self, service_type: str) -> NetworkStructure:
        if service_type not in self._structures:
            self._structures[service_type] = self.types[service_type].structure()
        return self._structures[service_type]

    def cold_model(self, service_type: str, device_type: str) -> SloIModel:
        return build_model(self.structure(service_type), service_type, device_type)


def default_hw_grid(bins: int = 10) -> Binning:
    return hardware_grid(bins)


def constraint_domain(values: Sequence) -> tuple[str, ...]:
    """Canonical state labels for a constraint domain (numbers kept terse)."""
    labels = []
    for value in values:
        if isinstance(value, float) and value.is_integer():
            labels.append(str(int(value)))
        else:
            labels.append(str(value))
    return tuple(labels)
