"""SLO primitives: bounds, indicator arithmetic, buffers, windows.

Fulfillment of a single SLO over a batch of records is the fraction of
records whose raw metric value lies inside the inclusive [min, max]
interval. Fulfillment of an SLO set is the unweighted mean over its
members' fractions.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .errors import (
    EmptyObservationsError,
    EmptyWindowError,
    MissingMetricError,
)

RawValue = Union[float, str]


@dataclass(frozen=True)
class Slo:
    """An inclusive bound [min, max] on one metric variable."""

    metric: str
    min: float = -math.inf
    max: float = math.inf

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError(f"SLO on {self.metric!r}: min {self.min} > max {self.max}")


@dataclass(frozen=True)
class SloSet:
    """The SLOs one service must fulfil, ordered and unique per metric."""

    slos: tuple[Slo, ...]

    def __post_init__(self):
        metrics = [s.metric for s in self.slos]
        if len(set(metrics)) != len(metrics):
            raise ValueError("duplicate metric in SLO set")

    def __iter__(self):
        return iter(self.slos)

    def __len__(self) -> int:
        return len(self.slos)


@dataclass(frozen=True)
class Observation:
    """One monitored variable: raw value plus its bin label."""

    value: RawValue
    bin: str


@dataclass(frozen=True)
class MetricsRecord:
    """All variables observed for one service in one tick."""

    tick: int
    values: Mapping[str, Observation]

    def raw(self, metric: str) -> RawValue:
        try:
            return self.values[metric].value
        except KeyError:
            raise MissingMetricError(f"record at tick {self.tick} lacks metric {metric!r}") from None


def indicator(slo: Slo, record: MetricsRecord) -> float:
    """1.0 if the record's raw value lies in [min, max], else 0.0."""
    value = record.raw(slo.metric)
    if isinstance(value, str):
        raise MissingMetricError(f"metric {slo.metric!r} is categorical, SLO bounds need a number")
    return 1.0 if slo.min <= value <= slo.max else 0.0


def slo_fulfillment(slo: Slo, records: Iterable[MetricsRecord]) -> float:
    """Fraction of records satisfying the SLO. Empty input is an error."""
    total = 0
    hits = 0.0
    for record in records:
        hits += indicator(slo, record)
        total += 1
    if total == 0:
        raise EmptyObservationsError(f"no records to evaluate SLO on {slo.metric!r}")
    return hits / total


def set_fulfillment(slos: SloSet | Iterable[Slo], records: Iterable[MetricsRecord]) -> float:
    """Mean per-SLO fulfillment over the set; 1.0 for an empty set."""
    slo_list = list(slos)
    if not slo_list:
        return 1.0
    record_list = list(records)
    return sum(slo_fulfillment(s, record_list) for s in slo_list) / len(slo_list)


class MetricsBuffer:
    """Bounded FIFO of records feeding the next retraining batch."""

    def __init__(self, capacity: int = 100):
        if capacity < 1:
            raise ValueError("buffer capacity must be positive")
        self.capacity = capacity
        self._records: deque[MetricsRecord] = deque(maxlen=capacity)

    def append(self, record: MetricsRecord) -> None:
        self._records.append(record)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def snapshot(self) -> list[MetricsRecord]:
        return list(self._records)

    def clear(self) -> None:
        self._records.clear()

    def drain(self) -> list[MetricsRecord]:
        """Snapshot and clear in one step, as done when a retrain is requested."""
        batch = self.snapshot()
        self.clear()
        return batch


def buffer_full(buffer: MetricsBuffer) -> float:
    """Occupancy ratio FULL(B) = |B| / capacity, in [0, 1]."""
    return len(buffer) / buffer.capacity


@dataclass
class SlidingWindow:
    """Last N per-tick fulfillment values for one service."""

    capacity: int = 10
    _values: deque = field(default_factory=deque, repr=False)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("window capacity must be positive")
        self._values = deque(self._values, maxlen=self.capacity)

    def push(self, value: float) -> None:
        self._values.append(float(value))

    def __len__(self) -> int:
        return len(self._values)

    def __iter__(self):
        return iter(self._values)


def window_mean(window: SlidingWindow) -> float:
    """Mean of the window's values; empty window is an error."""
    if len(window) == 0:
        raise EmptyWindowError("sliding window holds no fulfillment values yet")
    return sum(window) / len(window)
