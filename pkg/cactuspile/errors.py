class CactusError(Exception):
    """Base error; `exit_code` is what the command line returns for it."""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class VerificationMismatch(CactusError):
    """Two independent computations disagree."""

    exit_code = 1


class SizeGuardError(CactusError):
    """An exhaustive computation was asked for more than the configured limit."""

    exit_code = 2


class InputError(CactusError):
    """A graph, configuration or cluster given on input is malformed."""

    exit_code = 3


class ShapeError(InputError, ValueError):
    """A graph or tree shape violates the expanded-cactus structure."""


class UnstableConfigurationError(InputError, ValueError):
    """An operation that needs a stable configuration was given an unstable one."""
