"""Exact inference: variable elimination, hard and soft evidence.

Soft evidence enters as a mixture: for every combination b of the soft
variables' states, the conditional P(target | b, hard evidence) is
weighted by the product of the soft vectors' masses at b. Combinations
impossible under the hard evidence are excluded and the weights are
renormalized over the feasible remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import InconsistentEvidenceError, UnknownVariableError
from ..slo_core import Slo, SloSet
from .model import SloIModel
from .structure import VariableSpec


@dataclass(frozen=True)
class DistributionSet:
    """One probability vector per hardware variable, on that variable's grid."""

    entries: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        fixed = {}
        for name, vector in self.entries.items():
            arr = np.asarray(vector, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"distribution for {name!r} must be a vector")
            if np.any(arr < -1e-12):
                raise ValueError(f"distribution for {name!r} has negative mass")
            if abs(arr.sum() - 1.0) > 1e-9:
                raise ValueError(f"distribution for {name!r} does not sum to 1")
            fixed[name] = arr
        object.__setattr__(self, "entries", fixed)

    def names(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def vector(self, name: str) -> np.ndarray:
        return self.entries[name]

    def __len__(self) -> int:
        return len(self.entries)


class _Factor:
    __slots__ = ("names", "table")

    def __init__(self, names: tuple[str, ...], table: np.ndarray):
        self.names = names
        self.table = table


def _align(factor: _Factor, names: tuple[str, ...]) -> np.ndarray:
    """Reshape/transpose a factor's table to broadcast over the name order."""
    order = sorted(range(len(factor.names)), key=lambda i: names.index(factor.names[i]))
    table = factor.table.transpose(order)
    ordered = [factor.names[i] for i in order]
    shape = []
    at = 0
    for name in names:
        if at < len(ordered) and ordered[at] == name:
            shape.append(table.shape[at])
            at += 1
        else:
            shape.append(1)
    return table.reshape(shape)


def _product(f: _Factor, g: _Factor) -> _Factor:
    names = f.names + tuple(n for n in g.names if n not in f.names)
    return _Factor(names, _align(f, names) * _align(g, names))


def _marginalize(factor: _Factor, name: str) -> _Factor:
    axis = factor.names.index(name)
    names = factor.names[:axis] + factor.names[axis + 1:]
    return _Factor(names, factor.table.sum(axis=axis))


def _evidence_indices(model: SloIModel, evidence: Mapping[str, str]) -> dict[str, int]:
    indices = {}
    for name, state in evidence.items():
        spec = model.structure.variable(name)
        indices[name] = spec.state_index(state)
    return indices


def _restricted_factors(model: SloIModel, indices: Mapping[str, int]) -> list[_Factor]:
    factors = []
    for spec in model.structure.variables:
        cpt = model.cpt(spec.name)
        names = cpt.parents + (spec.name,)
        table = cpt.probabilities()
        keep = []
        for axis, var in enumerate(names):
            if var in indices:
                table = np.take(table, indices[var], axis=len(keep))
            else:
                keep.append(var)
        factors.append(_Factor(tuple(keep), table))
    return factors


def _joint(model: SloIModel, query: tuple[str, ...], indices: Mapping[str, int]) -> _Factor:
    """Unnormalized joint over the query variables given hard evidence."""
    factors = _restricted_factors(model, indices)
    hidden = [v.name for v in model.structure.variables
              if v.name not in query and v.name not in indices]
    for name in sorted(hidden):
        related = [f for f in factors if name in f.names]
        rest = [f for f in factors if name not in f.names]
        if not related:
            continue
        prod = related[0]
        for f in related[1:]:
            prod = _product(prod, f)
        factors = rest + [_marginalize(prod, name)]
    result = _Factor((), np.asarray(1.0))
    for f in factors:
        result = _product(result, f)
    return _Factor(tuple(query), _align(result, tuple(query)))


def query_conditional(model: SloIModel, query: tuple[str, ...],
                      evidence: Mapping[str, str]) -> np.ndarray:
    """Normalized P(query | evidence) as an array with one axis per query var."""
    for name in query:
        model.structure.variable(name)
        if name in evidence:
            raise ValueError(f"variable {name!r} is both query and evidence")
    indices = _evidence_indices(model, evidence)
    joint = _joint(model, tuple(query), indices)
    total = joint.table.sum()
    if total <= 0.0:
        raise InconsistentEvidenceError(
            f"evidence {dict(evidence)!r} has zero probability under the model")
    return joint.table / total


def _satisfying_indices(spec: VariableSpec, slo: Slo) -> list[int]:
    if spec.edges is None:
        raise UnknownVariableError(
            f"variable {spec.name!r} carries no bin edges, cannot classify against an SLO")
    hits = []
    for i in range(len(spec.states)):
        lo, hi = spec.edges[i], spec.edges[i + 1]
        if lo >= slo.min and hi <= slo.max:
            hits.append(i)
    return hits


def _split_soft(model: SloIModel, soft: DistributionSet | None,
                constraints: Mapping[str, str]) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Separate one-hot soft vectors (exact hard evidence) from true mixtures."""
    hard: dict[str, str] = {}
    mixed: dict[str, np.ndarray] = {}
    if soft is None:
        return hard, mixed
    for name in soft.names():
        spec = model.structure.variable(name)
        if spec.role != "hardware":
            raise UnknownVariableError(f"soft evidence targets non-hardware variable {name!r}")
        if name in constraints:
            raise ValueError(f"variable {name!r} appears in both hard and soft evidence")
        vector = soft.vector(name)
        if len(vector) != spec.cardinality:
            raise ValueError(f"soft vector for {name!r} has wrong length")
        ones = np.flatnonzero(vector == 1.0)
        if len(ones) == 1:
            hard[name] = spec.states[int(ones[0])]
        else:
            mixed[name] = vector
    return hard, mixed


def _slo_probability(model: SloIModel, slo: Slo, hard: Mapping[str, str],
                     mixed: Mapping[str, np.ndarray]) -> float:
    spec = model.structure.variable(slo.metric)
    sat = _satisfying_indices(spec, slo)
    if not mixed:
        posterior = query_conditional(model, (slo.metric,), hard)
        return float(posterior[sat].sum()) if sat else 0.0

    mixture_names = tuple(sorted(mixed))
    indices = _evidence_indices(model, hard)
    joint = _joint(model, (slo.metric,) + mixture_names, indices)
    table = joint.table
    totals = table.sum(axis=0)
    sat_mass = table[sat].sum(axis=0) if sat else np.zeros_like(totals)

    weights = np.asarray(1.0)
    for name in mixture_names:
        weights = np.multiply.outer(weights, mixed[name])
    feasible = totals > 0.0
    feasible_weight = float(weights[feasible].sum())
    if feasible_weight <= 0.0:
        raise InconsistentEvidenceError(
            "soft evidence places all mass on hardware states impossible under the evidence")
    ratio = np.zeros_like(totals)
    ratio[feasible] = sat_mass[feasible] / totals[feasible]
    return float((weights * ratio)[feasible].sum() / feasible_weight)


def infer_slo(model: SloIModel, slos: SloSet, constraints: Mapping[str, str],
              soft: DistributionSet | None = None) -> float:
    """Predicted fulfillment p: mean over the set of per-SLO probabilities.

    constraints is hard evidence (state names); soft carries utilization
    distributions for hardware variables, e.g. a convolved platoon load.
    An empty SLO set is vacuously fulfilled.
    """
    slo_list = list(slos)
    if not slo_list:
        return 1.0
    hard_soft, mixed = _split_soft(model, soft, constraints)
    hard = dict(constraints)
    hard.update(hard_soft)
    total = 0.0
    for slo in slo_list:
        total += _slo_probability(model, slo, hard, mixed)
    return total / len(slo_list)


def marginal_hw(model: SloIModel, constraints: Mapping[str, str]) -> DistributionSet:
    """Posterior marginal per hardware variable under the given evidence."""
    names = model.structure.names_by_role("hardware")
    if not names:
        raise UnknownVariableError("model declares no hardware variables")
    entries = {}
    for name in names:
        if name in constraints:
            spec = model.structure.variable(name)
            vector = np.zeros(spec.cardinality)
            vector[spec.state_index(constraints[name])] = 1.0
        else:
            vector = query_conditional(model, (name,), constraints)
        entries[name] = vector
    return DistributionSet(entries=entries)
