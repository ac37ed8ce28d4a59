"""Network structure: variables, roles, and the expert-given DAG."""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

from ..errors import CyclicStructureError, UnknownVariableError

ROLES = ("constraint", "hardware", "metric")

HW_VARIABLES = ("cpu", "gpu", "memory")


@dataclass(frozen=True)
class VariableSpec:
    """One node: a named discrete variable with ordered states.

    role is one of constraint / hardware / metric. Numeric variables
    (hardware, metric) carry the bin edges their state labels stand for;
    categorical constraints leave edges as None.
    """

    name: str
    states: tuple[str, ...]
    role: str
    edges: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r} for variable {self.name!r}")
        if len(self.states) < 2:
            raise ValueError(f"variable {self.name!r} needs at least two states")
        if len(set(self.states)) != len(self.states):
            raise ValueError(f"variable {self.name!r} has duplicate states")
        if self.edges is not None and len(self.edges) != len(self.states) + 1:
            raise ValueError(f"variable {self.name!r}: edge count must be state count + 1")
        if self.role == "hardware":
            if self.edges is None:
                raise ValueError(f"hardware variable {self.name!r} needs utilization bin edges")
            if self.edges[0] != 0.0 or self.edges[-1] != 1.0:
                raise ValueError(f"hardware variable {self.name!r} bins must cover [0, 1]")

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def state_index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise UnknownVariableError(
                f"variable {self.name!r} has no state {state!r}") from None


@dataclass(frozen=True)
class NetworkStructure:
    """Immutable DAG over named variables.

    Edges are (parent, child) pairs. Construction validates that every
    endpoint names a declared variable and that the graph is acyclic.
    """

    variables: tuple[VariableSpec, ...]
    edges: tuple[tuple[str, str], ...]
    _by_name: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_name = {v.name: v for v in self.variables}
        if len(by_name) != len(self.variables):
            raise ValueError("duplicate variable names in structure")
        for parent, child in self.edges:
            for end in (parent, child):
                if end not in by_name:
                    raise UnknownVariableError(f"edge endpoint {end!r} is not a declared variable")
        graph: dict[str, set[str]] = {v.name: set() for v in self.variables}
        for parent, child in self.edges:
            graph[child].add(parent)
        try:
            order = tuple(TopologicalSorter(graph).static_order())
        except CycleError as exc:
            raise CyclicStructureError(f"structure contains a cycle: {exc.args[1]}") from None
        object.__setattr__(self, "_by_name", by_name)
        object.__setattr__(self, "_topo_order", order)

    def variable(self, name: str) -> VariableSpec:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownVariableError(f"no variable named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def parents(self, name: str) -> tuple[str, ...]:
        self.variable(name)
        # Parent order follows the declared variable order for stable CPT axes.
        declared = [v.name for v in self.variables]
        ps = {p for p, c in self.edges if c == name}
        return tuple(n for n in declared if n in ps)

    def topological_order(self) -> tuple[str, ...]:
        return self._topo_order

    def names_by_role(self, role: str) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role == role)
