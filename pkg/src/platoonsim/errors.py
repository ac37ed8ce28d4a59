"""Exception hierarchy for the platoon simulator."""

from __future__ import annotations


class PlatoonSimError(Exception):
    """Base class for all errors raised by this package."""


class ScenarioError(PlatoonSimError):
    """Scenario config failed validation.

    Carries a list of human-readable diagnostics, each anchored to a
    section/key (and a line number when the parser provides one).
    """

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


# --- Bayesian network ---------------------------------------------------

class CyclicStructureError(PlatoonSimError):
    """The proposed network structure contains a directed cycle."""


class UnknownVariableError(PlatoonSimError):
    """An edge, evidence key, or query names a variable not in the network."""


class RecordSchemaMismatchError(PlatoonSimError):
    """A metrics record does not match the model's variables or states."""


class InconsistentEvidenceError(PlatoonSimError):
    """Evidence has zero probability under the model."""


# --- SLO arithmetic ------------------------------------------------------

class EmptyObservationsError(PlatoonSimError):
    """Fulfillment over zero records is undefined."""


class MissingMetricError(PlatoonSimError):
    """A record lacks the metric an SLO refers to."""


class EmptyWindowError(PlatoonSimError):
    """Mean of an empty sliding window is undefined."""


# --- Hardware convolution -------------------------------------------------

class GridMismatchError(PlatoonSimError):
    """Distributions defined over different utilization grids cannot convolve."""


# --- Platoon protocol -----------------------------------------------------

class DuplicateIdError(PlatoonSimError):
    """A vehicle with this id is already a platoon member."""


class UnknownIdError(PlatoonSimError):
    """Referenced vehicle/service id is not known."""


class NotLeaderError(PlatoonSimError):
    """A leader-only operation was attempted on a non-leader."""


class TargetRejectedError(PlatoonSimError):
    """The offload target refused or vanished before the handover began."""


# --- Oracle ---------------------------------------------------------------

class SearchSpaceTooLargeError(PlatoonSimError):
    """Exhaustive enumeration would exceed the configured bound."""
