class LLAError(Exception):
    """Base error. `exit_code` is what the command line exits with."""

    exit_code = 1


class ConfigError(LLAError):
    exit_code = 2


class DataError(LLAError):
    exit_code = 3


class VocabularyError(LLAError):
    exit_code = 3


class NumericError(LLAError):
    exit_code = 4


class DimensionError(LLAError, ValueError):
    pass


class DomainError(LLAError, ValueError):
    pass


class PreconditionError(LLAError, ValueError):
    pass
