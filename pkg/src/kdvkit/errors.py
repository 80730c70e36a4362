"""Error taxonomy shared across the package.

Every failure mode that callers are expected to catch has a named class
here.  Numeric guards raise the same names as the symbolic engines so the
CLI can map any of them onto its exit codes.
"""


class KdvKitError(Exception):
    """Base class for all package errors."""


# --- symbolic algebra ---

class UnknownDerivation(KdvKitError):
    """A derivation was applied to a family that does not declare it."""


class NotJetFamily(KdvKitError):
    """A jet operation was requested for a plain symbol."""


class NotExact(KdvKitError):
    """integrate_total called on a polynomial that is not a total derivative."""


class NonTerminating(KdvKitError):
    """A rewrite system failed to reach a fixed point within its pass cap."""


class UnsupportedTerm(KdvKitError):
    """A structural assumption on the polynomial shape is violated."""


# --- equation solving / certification ---

class InconsistentSystem(KdvKitError):
    """A linear solve for unknown coefficients has no solution."""


class ResidualNonzero(KdvKitError):
    """An identity expected to collapse to zero did not."""


class NoConstraintClosure(KdvKitError):
    """A constraint derivation did not terminate in a finite generating set."""


class MissingSymbol(KdvKitError):
    """An expansion refers to a symbol outside the declared bank."""


class TruncationTooShallow(KdvKitError):
    """A requested series order lies below the reliable truncation floor."""


class NonCollapsing(KdvKitError):
    """A residual is not an exact multiple of the expected polynomial."""


class UnknownSurvivor(KdvKitError):
    """Undetermined series symbols survive in a retained output order."""


# --- domains, inputs, validation ---

class DomainError(KdvKitError):
    """Argument outside the mathematical domain of the operation."""


class MissingInput(KdvKitError):
    """A required supplied value is absent."""


class InvalidSpec(KdvKitError):
    """A job or builder specification failed schema validation."""


class ValidationFailure(KdvKitError):
    """A validator rejected its subject (thinning function, kernel, ...)."""


class RangeError(KdvKitError):
    """Argument outside the supported numeric range."""


class BranchCut(KdvKitError):
    """Evaluation requested on or across a branch cut."""


class ZeroEta(KdvKitError):
    """Small-parameter prediction requested at eta = 0."""


# --- quadrature / operators ---

class NonConvergentQuadrature(KdvKitError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class BadWindow(KdvKitError):
    """Discretization window is empty, inverted, or too short."""


class SpectrumViolation(KdvKitError):
    """Operator spectrum left [0, 1) or the determinant left (0, 1]."""


# --- time stepping ---

class BlowupDetected(KdvKitError):
    """Field norm exceeded the blowup guard during evolution."""


class Unstable(KdvKitError):
    """Step-size/stability heuristic rejected the run configuration."""


class PeriodTooSmall(KdvKitError):
    """Periodic window too small for the requested initial condition."""
