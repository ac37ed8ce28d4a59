"""Discretization grids shared by models, records, and the world.

Hardware utilization lives on a fixed grid of bins covering [0, 1];
metric variables get bins whose edges sit exactly on the SLO thresholds
so that bin-level fulfillment classification never straddles a bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

HW_BIN_COUNT = 10


@dataclass(frozen=True)
class Binning:
    """An ordered partition of a real interval into labelled bins.

    Bins are half-open [lo, hi) except the last, which is closed so a
    finite domain's upper endpoint still maps somewhere.
    """

    edges: tuple[float, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.edges) < 2:
            raise ValueError("a binning needs at least two edges")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("bin edges must be strictly increasing")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(
                _span_label(a, b) for a, b in zip(self.edges, self.edges[1:])))
        if len(self.labels) != len(self.edges) - 1:
            raise ValueError("label count must equal bin count")

    def __len__(self) -> int:
        return len(self.edges) - 1

    def bin_index(self, value: float) -> int:
        """Index of the bin containing value (clamped to the grid)."""
        if value <= self.edges[0]:
            return 0
        for i in range(len(self)):
            if value < self.edges[i + 1]:
                return i
        return len(self) - 1

    def bin_label(self, value: float) -> str:
        return self.labels[self.bin_index(value)]

    def interval(self, index: int) -> tuple[float, float]:
        return self.edges[index], self.edges[index + 1]

    def satisfies(self, index: int, lo: float, hi: float) -> bool:
        """True iff the whole bin lies inside [lo, hi]."""
        a, b = self.interval(index)
        return a >= lo and b <= hi


def _span_label(a: float, b: float) -> str:
    hi = "inf" if math.isinf(b) else f"{b:g}"
    return f"{a:g}-{hi}"


def hardware_grid(bins: int = HW_BIN_COUNT) -> Binning:
    """Utilization grid over [0, 1], labelled by lower edge."""
    edges = tuple(i / bins for i in range(bins + 1))
    labels = tuple(f"{e:.1f}" if bins == HW_BIN_COUNT else f"{e:g}"
                   for e in edges[:-1])
    return Binning(edges=edges, labels=labels)


def metric_grid(thresholds: list[float], upper: float = math.inf) -> Binning:
    """Bins for a metric variable with edges pinned at each threshold.

    Padding edges at half and 1.5x/3x of each threshold give the learner
    some resolution on either side of the bound without exploding the CPT.
    """
    finite = sorted({t for t in thresholds if math.isfinite(t) and t > 0})
    if not finite:
        raise ValueError("metric binning needs at least one finite positive threshold")
    edges = {0.0}
    for t in finite:
        edges.add(t / 2)
        edges.add(t)
    top = max(finite)
    for pad in (1.5 * top, 3.0 * top):
        if pad < upper:
            edges.add(pad)
    edges.add(upper)
    cleaned = sorted(e for e in edges if e <= upper)
    return Binning(edges=tuple(cleaned))
