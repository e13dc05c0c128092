"""Exception types shared across the estimation pipeline."""


class CorruptDatasetError(Exception):
    """Raised when an input file is unusable (bad header, mostly malformed)."""


class EstimationError(Exception):
    """Base class for per-case estimation failures.

    These are the "recall" outcomes: a case that cannot be estimated is
    reported as recalled, it does not abort a pipeline run.
    """


class EmptyWindowError(EstimationError):
    """An operation received a window with no events."""


class NoPeriodicityError(EstimationError):
    """The event series is flat; the spectrum has no usable peak."""


class UnreliableEstimateError(EstimationError):
    """All cycle candidates scored below the KS confidence floor."""


class InsufficientDataError(EstimationError):
    """Too few events or too few reliable windows to proceed."""


class NoInflectionError(EstimationError):
    """No gradient jump exceeds the dynamic threshold."""


class DegenerateRegressionError(EstimationError):
    """The two segment regressions are parallel; no intersection exists."""


class NoSwitchFoundError(EstimationError):
    """A candidate switch range dissolved: no split yields differing cycles."""
