"""Predicted platoon-member load: discrete convolution with saturation.

Utilization distributions live on a shared grid of bins over [0, 1].
Summing independent loads convolves their distributions; everything that
would land above the top bin piles up in the top bin instead, because a
device cannot exceed full utilization.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .bayesnet.inference import DistributionSet, marginal_hw
from .errors import GridMismatchError

HW_NAMES = ("cpu", "gpu", "memory")


def convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Saturating convolution of two distributions on the same grid."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise GridMismatchError("convolution operands must be vectors")
    if len(a) != len(b):
        raise GridMismatchError(f"grid sizes differ: {len(a)} vs {len(b)}")
    n = len(a)
    full = np.convolve(a, b)
    out = np.empty(n)
    out[: n - 1] = full[: n - 1]
    out[n - 1] = full[n - 1:].sum()
    return out


def delta(bins: int, index: int = 0) -> np.ndarray:
    """Point mass at one bin."""
    vector = np.zeros(bins)
    vector[index] = 1.0
    return vector


def conv_hw(services: Iterable, device_type: str, models,
            isolation_evidence: Mapping[str, str] | None = None,
            bins: int = 10) -> DistributionSet:
    """Expected total utilization if the given services share one device.

    Each service contributes its model's hardware marginals under its own
    constraints; marginals are convolved per resource. An empty service
    set yields a point mass at zero load. isolation_evidence, when given,
    is appended to every service's constraints so the marginals describe
    clean solo footprints rather than historically co-located totals.

    services must expose service_type and constraints; models must expose
    lookup(service_type, device_type) returning a model whose structure
    contains the hardware variables.
    """
    service_list = list(services)
    if not service_list:
        return DistributionSet(entries={name: delta(bins) for name in HW_NAMES})

    accumulated: dict[str, np.ndarray] | None = None
    for service in service_list:
        model = models.lookup(service.service_type, device_type)
        evidence = dict(service.constraints)
        if isolation_evidence:
            for key, value in isolation_evidence.items():
                if key in model.structure:
                    evidence[key] = value
        marginals = marginal_hw(model, evidence)
        if accumulated is None:
            accumulated = {name: np.asarray(marginals.vector(name), dtype=float)
                           for name in marginals.names()}
        else:
            if set(marginals.names()) != set(accumulated):
                raise GridMismatchError("models disagree on hardware variable names")
            for name in accumulated:
                accumulated[name] = convolve(accumulated[name], marginals.vector(name))
    assert accumulated is not None
    return DistributionSet(entries=accumulated)
