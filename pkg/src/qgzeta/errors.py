"""Exception hierarchy shared by all modules.

Each class carries an ``exit_code`` used by the command-line front end, and a
``details`` dict that is serialized into the machine-readable error report.
"""


class QGError(Exception):
    """Base class for every error raised by qgzeta."""

    exit_code = 4

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self), **self.details}


class GraphSpecError(QGError):
    """Malformed or unknown graph description."""

    exit_code = 2


class ValidationError(QGError):
    """Matching conditions that do not define a self-adjoint operator."""

    exit_code = 3


class DimensionError(ValidationError):
    pass


class NumericalError(QGError):
    """A numerical contract could not be met."""

    exit_code = 4


class PoleError(NumericalError):
    """Evaluation requested at (or too close to) a pole of a secular function."""


class SingularMatrixError(NumericalError):
    pass


class NonGenericError(NumericalError):
    """Pole set of the secular function is not the full length lattice."""


class ZeroModeError(NumericalError):
    pass


class UnsupportedConditionsError(NumericalError):
    """The secular function is complex or changes sign on the imaginary axis."""


class ZetaPoleError(NumericalError):
    """Requested s is a pole of the zeta function or of the representation."""


class DegenerateExpansionError(NumericalError):
    pass


class CutoffError(NumericalError):
    """Spectrum cutoff too small for the requested quantity."""


class BracketError(NumericalError):
    pass
