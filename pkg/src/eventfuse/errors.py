"""Exception types raised by the eventfuse package."""


class EventFuseError(Exception):
    """Base class for all package errors."""


# --- ingest ---------------------------------------------------------------

class ParseError(EventFuseError):
    """Malformed manifest line (bad JSON, bad field, or invalid date)."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DuplicateItem(EventFuseError):
    """Two manifest lines share the same item id."""


class LabelOutOfRange(EventFuseError):
    """A label is >= the declared class count."""


class FormatError(EventFuseError):
    """Feature file header, magic, or payload does not match its format."""


class NonFiniteFeature(EventFuseError):
    """A feature value is NaN or infinite."""


# --- spline / temporal ----------------------------------------------------

class TooFewKnots(EventFuseError):
    """Fewer than three knots were supplied to the spline fitter."""


class BadKnots(EventFuseError):
    """Knot abscissae are not strictly increasing."""


class BadSmoothing(EventFuseError):
    """Smoothing parameter outside (0, 1]."""


class NoTimestamps(EventFuseError):
    """A temporal model was requested for a class with no capture dates."""


class MissingModel(EventFuseError):
    """A temporal model set does not cover every required class."""


# --- refinement / probabilities -------------------------------------------

class DimensionError(EventFuseError):
    """Vector or matrix shapes do not agree."""


class BadScore(EventFuseError):
    """A temporal score lies outside [0, 1]."""


# --- classifier ------------------------------------------------------------

class DegenerateLabels(EventFuseError):
    """Binary training or calibration data contains only one label sign."""


class CalibrationFailure(EventFuseError):
    """Sigmoid calibration did not converge."""


class BadPairwise(EventFuseError):
    """Pairwise probability matrix is inconsistent (r_ab + r_ba != 1)."""


class TooFewExamples(EventFuseError):
    """A class has too few examples for multi-class training."""


# --- fusion ------------------------------------------------------------------

class AlignmentError(EventFuseError):
    """Feature sources and manifest do not cover the same item ids."""


# --- evaluation --------------------------------------------------------------

class NoPositives(EventFuseError):
    """Average precision is undefined without at least one relevant item."""


# --- configuration -----------------------------------------------------------

class ConfigError(EventFuseError):
    """Invalid run configuration; carries the full list of problems."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
