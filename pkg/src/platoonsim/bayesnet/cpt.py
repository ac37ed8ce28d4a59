"""Conditional probability tables backed by smoothed counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Cpt:
    """Counts for P(child | parents), Laplace-smoothed.

    counts has one axis per parent (in declared order) plus a final axis
    for the child. Cells never drop below the smoothing mass alpha: a
    fresh table holds exactly alpha everywhere, which normalizes to the
    uniform distribution.
    """

    child: str
    parents: tuple[str, ...]
    counts: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.ndim != len(self.parents) + 1:
            raise ValueError(f"CPT for {self.child!r}: axis count mismatch")
        if np.any(self.counts < self.alpha - 1e-12):
            raise ValueError(f"CPT for {self.child!r}: counts below smoothing floor")

    @classmethod
    def fresh(cls, child: str, parents: tuple[str, ...], shape: tuple[int, ...],
              alpha: float = 1.0) -> "Cpt":
        return cls(child=child, parents=parents, counts=np.full(shape, alpha), alpha=alpha)

    def probabilities(self) -> np.ndarray:
        """Row-normalized table; rows always sum to 1 thanks to smoothing."""
        totals = self.counts.sum(axis=-1, keepdims=True)
        return self.counts / totals

    def absorb(self, tally: np.ndarray, decay: float = 1.0) -> None:
        """Add a batch tally, optionally decaying earlier observations.

        decay scales the observed mass only; the alpha floor is preserved
        so no cell ever reaches zero probability.
        """
        if tally.shape != self.counts.shape:
            raise ValueError(f"CPT for {self.child!r}: tally shape mismatch")
        if not 0.0 <= decay <= 1.0:
            raise ValueError("decay must lie in [0, 1]")
        observed = self.counts - self.alpha
        self.counts = self.alpha + observed * decay + tally

    def copy(self) -> "Cpt":
        return Cpt(child=self.child, parents=self.parents,
                   counts=self.counts.copy(), alpha=self.alpha)
