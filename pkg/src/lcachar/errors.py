"""Exception hierarchy.

Errors split into input errors (bad data, unsupported forms), numerical
failures with a witness attached, and inconclusive outcomes.
"""

from __future__ import annotations


class LCAError(Exception):
    """Base class for every error raised by the package."""


class InputError(LCAError, ValueError):
    """Malformed or inconsistent input."""


class MismatchedGroups(InputError):
    pass


class UnsupportedSubgroupForm(InputError):
    pass


class NotAnAutomorphism(InputError):
    pass


class NonCompactSubgroup(InputError):
    pass


class WeightSumNotOne(InputError):
    pass


class PointOutsideGroup(InputError):
    pass


class SpectralNotSupported(InputError):
    pass


class PhiNotReal(InputError):
    pass


class WindowTooSmall(InputError):
    pass


class WitnessError(LCAError):
    """A numerical check failed at a specific point."""

    def __init__(self, message: str, witness=None, residual: float | None = None):
        super().__init__(message)
        self.witness = witness
        self.residual = residual


class WindowExhausted(WitnessError):
    pass


class NotPolynomial(WitnessError):
    pass


class VanishingValue(WitnessError):
    pass


class BranchInconsistency(WitnessError):
    pass


class StepTooLarge(WitnessError):
    pass


class BaseEquationViolated(WitnessError):
    pass


class StepResidual(WitnessError):
    pass


class SupportNotSubgroup(WitnessError):
    pass


class CaseMismatch(WitnessError):
    pass


class ResidualTooLarge(WitnessError):
    def __init__(self, message: str, fit=None, residual: float | None = None, witness=None):
        super().__init__(message, witness=witness, residual=residual)
        self.fit = fit


class HypothesisNotMet(WitnessError):
    pass


class TailBoundUnavailable(LCAError):
    pass


class Inconclusive(LCAError):
    """Raised when a certificate margin sits inside the tolerance band."""

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class BochnerFail(LCAError):
    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class SearchBudgetExceeded(Inconclusive):
    pass
