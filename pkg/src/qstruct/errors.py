"""Semantic exceptions shared across the toolkit.

Argument/contract violations raise plain ``ValueError``; the classes here
mark domain conditions a caller may want to catch and handle individually
(and which the CLI maps to distinct exit codes).
"""


class StructuringError(Exception):
    """Base class for domain errors raised by this package."""

    category = "domain"


class DomainError(StructuringError):
    """Inputs are well-formed but outside the operation's domain."""

    category = "domain"


class NonEquivalenceError(StructuringError):
    """One distribution assigns mass where the other assigns none.

    Density ratios and relative entropy are undefined in that case; callers
    must resolve the support mismatch rather than receive an infinity.
    """

    category = "non-equivalence"


class ArbitrageError(StructuringError):
    """Input quotes imply a materially negative density (butterfly arbitrage)."""

    category = "arbitrage"


class InfeasibleViewError(StructuringError):
    """A view transformation would produce non-positive implied vols."""

    category = "infeasible-view"


class UnsupportedViewError(StructuringError):
    """Market/believed dynamics differ in more than the drift."""

    category = "unsupported-view"


class CoverageError(StructuringError):
    """A grid or bucket range does not cover the mass it must represent."""

    category = "coverage"


class WipeoutError(StructuringError):
    """A leveraged series lost its entire value on too many paths."""

    category = "wipeout"


class RankDeficientBasisError(StructuringError):
    """Replication instruments are collinear on the fitting grid."""

    category = "rank-deficient-basis"

    def __init__(self, message: str, instruments: tuple[str, ...] = ()):
        super().__init__(message)
        self.instruments = instruments
