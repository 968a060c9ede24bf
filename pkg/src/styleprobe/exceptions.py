"""Exception types raised across the package.

Every error that callers are expected to catch has a dedicated class here;
generic ValueError/TypeError are reserved for programming mistakes.
"""


class StyleProbeError(Exception):
    """Base class for all package errors."""


# ---------------------------------------------------------------- autodiff

class ShapeMismatch(StyleProbeError):
    """Operand shapes are incompatible for the requested operation."""


class UnknownAttribute(StyleProbeError):
    """An operation received an attribute it does not understand."""


class UnknownOperation(StyleProbeError):
    """Dispatch was asked for an operation kind that is not registered."""


class NotScalar(StyleProbeError):
    """backward() requires a scalar output tensor."""


class DetachedOutput(StyleProbeError):
    """The output tensor was not produced on the tape being differentiated."""


class NonFiniteEvaluation(StyleProbeError):
    """A function evaluation produced NaN or Inf where finite values are required."""


# ---------------------------------------------------------------- data

class EmptyDataset(StyleProbeError):
    """An operation that needs at least one sample received none."""


class BadMagic(StyleProbeError):
    """File header magic does not identify the expected format."""


class CountMismatch(StyleProbeError):
    """Image and label files disagree on the number of records."""


class TruncatedFile(StyleProbeError):
    """File ended before the declared payload was read."""


class UnknownLabel(StyleProbeError):
    """Class label outside the supported range."""


# ---------------------------------------------------------------- training

class DivergedTraining(StyleProbeError):
    """Training loss became NaN/Inf."""


# ---------------------------------------------------------------- analysis

class InvalidClass(StyleProbeError):
    """Class index outside [0, n_classes)."""


class ScopeMismatch(StyleProbeError):
    """Class-scoped operation applied to a mixed population with filtering disabled."""


class EmptySubset(StyleProbeError):
    """A required population subset (well/mis/class slice) is empty."""


class StartBelowThreshold(StyleProbeError):
    """Boundary search started from a point already at or below the decision threshold."""


class NoCrossingWithinBound(StyleProbeError):
    """No threshold crossing found within the configured maximum shift.

    Signals a non-influential dimension; callers typically skip it.
    """


class TooManyPoints(StyleProbeError):
    """Point count outside the limits of the exact O(n^2) embedding."""


class BadPerplexity(StyleProbeError):
    """Perplexity incompatible with the number of points."""


class DegenerateCovariance(StyleProbeError):
    """Covariance estimate unusable even after shrinkage."""


# ---------------------------------------------------------------- reporting

class IoFailure(StyleProbeError):
    """Writing a report artifact failed."""
