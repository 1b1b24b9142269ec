"""Exception hierarchy shared by every module.

Each class carries the CLI exit code the harness maps it to.
"""


class WalkError(Exception):
    exit_code = 1


class UsageError(WalkError, ValueError):
    exit_code = 4


class BudgetExceeded(WalkError):
    """An explicit enumeration exceeded its size budget."""

    exit_code = 3


class SupportOverflow(WalkError):
    """A sparse measure outgrew its support cap or the int64 key range."""

    exit_code = 3


class SearchFailure(WalkError):
    exit_code = 2


class CalibrationFailure(WalkError):
    exit_code = 2


class ConstructionError(WalkError):
    exit_code = 2

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


class TruncationError(WalkError, IndexError):
    exit_code = 4


class SamplingStarvation(WalkError):
    exit_code = 2


class VerificationFailure(WalkError):
    exit_code = 2
