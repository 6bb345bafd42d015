"""Exception and warning types shared across the lab."""


class SelbergLabError(Exception):
    """Base class for all lab errors."""

    exit_code = 2


class ConfigError(SelbergLabError, ValueError):
    exit_code = 1


class InvalidRangeError(ConfigError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(SelbergLabError, ValueError):
    exit_code = 1


class PoleError(DomainError):
    pass


class ResourceLimitError(SelbergLabError):
    exit_code = 1


class CoverageError(SelbergLabError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class FitError(SelbergLabError):
    pass


class DegenerateSignalError(SelbergLabError):
    def __init__(self, message, stage=None):
        if stage is not None:
            message = f"stage {stage}: {message}"
        super().__init__(message)
        self.stage = stage


class RefinementLimitError(SelbergLabError):
    pass


class IllConditionedFitWarning(UserWarning):
    pass


class EmptyBlockWarning(UserWarning):
    pass
