"""
Exception hierarchy for privcon.

CLI exit codes are attached to the exception classes so commands can map
failures without a lookup table.
"""

from typing import Optional


class PrivconError(Exception):
    """Base class for all privcon errors."""

    exit_code: int = 1


class SpecError(PrivconError):
    """Experiment spec is unreadable or invalid."""

    exit_code = 2


class ModelViolationError(PrivconError):
    """The network or adversary model required by an operation does not hold."""

    exit_code = 3


class UncoveredHonestNodeError(ModelViolationError):
    """An honest node has no corrupted neighbour."""

    def __init__(self, message: str, node: Optional[int] = None):
        super().__init__(message)
        self.node = node


class DisconnectedGraphError(ModelViolationError):
    """A connected graph was required."""


class MechanismConfigError(ModelViolationError):
    """Mechanism and solver cannot be combined (e.g. DOSP with linear iterations)."""


class CorruptedTargetError(ModelViolationError):
    """The target node of a privacy query is corrupted."""
