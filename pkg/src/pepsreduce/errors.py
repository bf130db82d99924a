"""Exception hierarchy shared by every module.

Each error carries an ``exit_code`` used by the command-line front end:
2 for configuration problems, 3 for decoding / majority failures, 4 when a
size cap is hit.
"""


class PepsReduceError(Exception):
    exit_code = 1


class ConfigInvalid(PepsReduceError, ValueError):
    exit_code = 2


class MixedFieldsError(PepsReduceError, TypeError):
    exit_code = 2


class NonFiniteInput(PepsReduceError, ValueError):
    exit_code = 2


class SingularMatrix(PepsReduceError, ArithmeticError):
    exit_code = 3


class SizeCapExceeded(PepsReduceError):
    exit_code = 4


class ShapeMismatch(PepsReduceError, ValueError):
    exit_code = 2


class SupportOutOfRange(PepsReduceError, ValueError):
    exit_code = 2


class ZeroNorm(PepsReduceError, ZeroDivisionError):
    exit_code = 3


class DuplicateAbscissa(PepsReduceError, ValueError):
    exit_code = 2


class InsufficientSamples(PepsReduceError, ValueError):
    exit_code = 2


class NonPositiveEpsilon(PepsReduceError, ValueError):
    exit_code = 2


class PointOutsideRadius(PepsReduceError, ValueError):
    exit_code = 2


class DecodingFailure(PepsReduceError):
    exit_code = 3


class DegenerateSystem(PepsReduceError):
    exit_code = 3


class ZeroDenominatorAtOne(PepsReduceError, ZeroDivisionError):
    exit_code = 3


class ReductionFailure(PepsReduceError):
    """Base for outcomes where a reduction produced no final value.

    The partially filled report is attached as ``report``.
    """

    exit_code = 3

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MajorityTie(ReductionFailure):
    pass


class AllRepeatsFailedDecoding(ReductionFailure):
    pass


class IoError(PepsReduceError, OSError):
    exit_code = 2
