"""Exception hierarchy shared by all lonscape modules."""

from __future__ import annotations


class LonscapeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidTreeError(LonscapeError):
    """A phenotype tree violates its structural invariants.

    Carries the list of violation codes produced by ``validate_tree``.
    """

    def __init__(self, violations: list[str]):
        super().__init__("invalid phenotype tree: " + "; ".join(violations))
        self.violations = violations


class InvalidGenotypeError(LonscapeError):
    """A genotype fails its encoding-specific invariants."""


class CycleDetectedError(LonscapeError):
    """Enabled CPPN connections do not form a feed-forward DAG."""


class EvalBackendFailure(LonscapeError):
    """An external evaluation backend died or misbehaved."""


class EvalTimeout(EvalBackendFailure):
    """The external backend did not answer within the per-evaluation timeout."""


class ProtocolError(EvalBackendFailure):
    """The external backend broke the line-delimited JSON protocol."""


class DanglingTransitionError(LonscapeError):
    """A run log transition references a node index with no logged entry."""


class NoReachablePairsError(LonscapeError):
    """Every ordered node pair in the graph is mutually unreachable."""


class EmptyInputError(LonscapeError):
    """An aggregate operation received no data."""


class ConfigError(LonscapeError):
    """An experiment configuration file or flag set is invalid."""


class SchemaMismatchError(LonscapeError):
    """An input file does not carry the expected schema version or kind."""
