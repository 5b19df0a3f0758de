"""
Error hierarchy for netdiff.

Every error carries a machine-readable ``reason`` (the class name) so the CLI
can print a one-line JSON report and pick an exit code from the error family.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class NetdiffError(Exception):
    """Base class for all netdiff errors. Maps to exit code 4 unless refined."""

    exit_code = 4

    def __init__(self, message: str = "", details: Optional[Dict[str, Any]] = None):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details or {}

    @property
    def reason(self) -> str:
        return self.__class__.__name__

    def to_dict(self) -> Dict[str, Any]:
        report: Dict[str, Any] = {"error": self.reason, "message": self.message}
        if self.details:
            report["details"] = self.details
        return report


class SpecError(NetdiffError):
    """The request itself is malformed (exit code 2)."""

    exit_code = 2


class Refusal(NetdiffError):
    """A precondition of the requested operation does not hold (exit code 3)."""

    exit_code = 3


# Spec errors
class UnknownNode(SpecError):
    pass


class UnknownNetwork(SpecError):
    pass


class InvalidNetwork(SpecError):
    pass


class ArityExceeded(SpecError):
    pass


class OutOfRegion(SpecError):
    pass


class TooLarge(SpecError):
    pass


class NotInFamily(SpecError):
    pass


class BlocksMixed(SpecError):
    pass


class InvalidConfiguration(SpecError):
    pass


class InvalidAggregation(SpecError):
    pass


class NotWindowTrace(SpecError):
    pass


class MissingWitnesses(SpecError):
    pass


# Refusals
class NotStrict(Refusal):
    pass


class UnsupportedBase(Refusal):
    pass


class NotBipartite(Refusal):
    pass


class NotSingleParity(Refusal):
    pass


class FiniteNetwork(Refusal):
    pass


class ExtinctionStalled(Refusal):
    pass


class RichnessViolated(Refusal):
    """Synthesis refused; ``clause`` names the violated richness clause."""

    def __init__(self, clause: str, message: str = "", details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        details.setdefault("clause", clause)
        super().__init__(message or f"richness violated: {clause}", details)
        self.clause = clause


class StarOverlap(Refusal):
    pass


class TargetTooLarge(Refusal):
    pass


class NoStoring(Refusal):
    pass


class InvalidTrajectory(Refusal):
    pass


class NotMonotone(Refusal):
    pass


class EndpointViolation(Refusal):
    pass


class NotFrontier(Refusal):
    pass
