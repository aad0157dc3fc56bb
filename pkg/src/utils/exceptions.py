"""Exception hierarchy shared by every pdro module."""


class PdroError(Exception):
    """Base class of all library errors."""


class ConfigurationError(PdroError, ValueError):
    """Inconsistent dimensions or an invalid run configuration.

    ``violations`` lists every problem found, so a config file can be fixed
    in one pass.
    """

    def __init__(self, message: str, violations=None):
        self.violations = list(violations or [])
        if self.violations:
            message = message + "\n" + "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(message)


class InvalidArgumentError(PdroError, ValueError):
    """An argument outside its documented domain."""


class InsufficientDataError(PdroError, ValueError):
    """Too few samples for the requested estimator."""


class UnsupportedCombinationError(PdroError, ValueError):
    """A metric / cost pairing the solvers do not support."""


class SolverAbortError(PdroError, RuntimeError):
    """The outer solver met a non-finite objective."""


class DataParseError(PdroError, ValueError):
    def __init__(self, message: str, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ResultsWriteError(PdroError, OSError):
    def __init__(self, message: str, path=None):
        self.path = path
        super().__init__(f"{message}: {path}" if path else message)


class UsageError(PdroError):
    """Bad command line: unknown subcommand, missing or malformed flags."""
