"""
Exception hierarchy shared by the arithmetic kernel, the pipeline and the oracle.
"""

from typing import Optional


class PCurvError(Exception):
    """Base class for every error raised by the package."""


class StructuralError(PCurvError):
    """Operands disagree on shape, truncation order or modulus."""


class ContractError(PCurvError):
    """A documented precondition does not hold."""


class NotInvertible(ContractError):
    """A residue has no inverse; the prime must be excluded."""

    def __init__(self, value: int, modulus: int):
        super().__init__(f"{value} is not invertible modulo {modulus}")
        self.value = value
        self.modulus = modulus


class NormalizationRequired(PCurvError):
    """The leading θ-coefficient is not an integer constant (missing shift)."""


class OperatorFormatError(PCurvError):
    """An operator file could not be parsed."""


class NotReducible(PCurvError):
    """The leading coefficient of an operator vanishes modulo p."""

    def __init__(self, p: int):
        super().__init__(f"leading coefficient vanishes modulo {p}")
        self.p = p


class ConsistencyError(PCurvError):
    """An internal invariant of the computation failed for one prime."""


class NonzeroLowYCoefficients(ConsistencyError):
    """The division by Y^k left a nonzero remainder."""


class MembershipError(ConsistencyError):
    """A value that must lie in 𝔽_p[θ^p−θ] (or 𝔽_p[x^p]) does not."""


class ExactDivisionFailed(PCurvError):
    """The division by l_x leaves a remainder; the Ξ-normalized form is kept."""

    def __init__(self, p: int, xi: Optional[object] = None):
        super().__init__(f"division by the leading coefficient is inexact modulo {p}")
        self.p = p
        self.xi = xi
