"""Exception types shared across the package.

Every error that a caller is expected to handle has its own class; plain
ValueError/AssertionError is reserved for genuine programming mistakes.
"""

from __future__ import annotations

__all__ = [
    "ConfdimError",
    "InvalidSpec",
    "DepthTooLarge",
    "DegenerateSpace",
    "InsufficientScales",
    "ParameterViolation",
    "LevelOutOfRange",
    "IdenticalPoints",
    "NotHorizontal",
    "UncertifiedParams",
    "HypothesisFailure",
    "PostconditionFailure",
    "DepthExceeded",
    "TooLarge",
    "HypothesisUnverified",
    "InsufficientData",
    "BracketInvalid",
    "BudgetExceeded",
    "ChainInvalid",
    "ThresholdNotReached",
    "InsufficientTriples",
]


class ConfdimError(Exception):
    """Base class for all package errors."""


class InvalidSpec(ConfdimError):
    """Space specification is malformed (bad kind, broken metric, empty cloud)."""


class DepthTooLarge(ConfdimError):
    """Requested resolution depth exceeds the sample budget."""


class DegenerateSpace(ConfdimError):
    """Space has a single point or zero diameter."""


class InsufficientScales(ConfdimError):
    """Too few (R, r) scale pairs for a dimension estimate."""


class ParameterViolation(ConfdimError):
    """Filling parameters violate a >= lambda >= 6."""


class LevelOutOfRange(ConfdimError):
    """Requested level does not exist in the filling."""


class IdenticalPoints(ConfdimError):
    """Operation requires two distinct points."""


class NotHorizontal(ConfdimError):
    """Path is not a single-level horizontal path."""


class UncertifiedParams(ConfdimError):
    """Operation needs certified hypothesis constants that are missing."""


class HypothesisFailure(ConfdimError):
    """A required hypothesis check failed on the input."""


class PostconditionFailure(ConfdimError):
    """A guaranteed postcondition failed; indicates a bug, not user error."""


class DepthExceeded(ConfdimError):
    """Requested level + separation exceeds the filling depth."""


class TooLarge(ConfdimError):
    """Instance too large for exhaustive brute-force treatment."""


class HypothesisUnverified(ConfdimError):
    """Covering hypothesis of the transfer bound could not be verified."""


class InsufficientData(ConfdimError):
    """Not enough table entries for a decay classification."""


class BracketInvalid(ConfdimError):
    """Bisection bracket does not straddle the decay transition."""


class BudgetExceeded(ConfdimError):
    """Computation budget exhausted before reaching the requested tolerance."""


class ChainInvalid(ConfdimError):
    """Point chain violates the step or separation preconditions."""


class ThresholdNotReached(ConfdimError):
    """Filling too shallow for the requested radius threshold."""


class InsufficientTriples(ConfdimError):
    """Too few sample triples for a distortion estimate."""
