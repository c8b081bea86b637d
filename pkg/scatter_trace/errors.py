"""Exception hierarchy shared by every scatter_trace module.

Each class also derives from the builtin it refines, so callers can catch
``ValueError``/``RuntimeError`` without importing this module. ``exit_code``
is the process status the command-line front end returns for it.
"""

CONFIG_EXIT = 2
NUMERICAL_EXIT = 3
MISMATCH_EXIT = 4


class ScatterTraceError(Exception):
    exit_code = NUMERICAL_EXIT


#
#   Input / configuration errors
#

class ConfigError(ScatterTraceError, ValueError):
    exit_code = CONFIG_EXIT

class FormatError(ScatterTraceError, ValueError):
    exit_code = CONFIG_EXIT

class DomainError(ScatterTraceError, ValueError):
    pass

class GridError(ScatterTraceError, ValueError):
    pass

class RangeError(ScatterTraceError, ValueError):
    pass

class PoleError(ScatterTraceError, ValueError):
    pass

class UnitarityError(ScatterTraceError, ValueError):
    pass

#
#   Numerical failures
#

class IntegrationError(ScatterTraceError, RuntimeError):
    pass

class BranchError(ScatterTraceError, RuntimeError):
    pass

class AccuracyError(ScatterTraceError, RuntimeError):
    pass

class TailError(ScatterTraceError, RuntimeError):
    pass

class ConvergenceError(ScatterTraceError, RuntimeError):
    pass

class ResolutionError(ScatterTraceError, RuntimeError):
    pass

class MissedLevelError(ScatterTraceError, RuntimeError):
    pass

class ExtrapolationError(ScatterTraceError, RuntimeError):
    pass

class TruncationError(ScatterTraceError, RuntimeError):
    pass

#
#   Oracle disagreement
#

class ValidationMismatch(ScatterTraceError, RuntimeError):
    exit_code = MISMATCH_EXIT
