"""Exception hierarchy shared by all modules."""


class PwidthError(Exception):
    """Base class for every error raised by the package."""


class PreconditionError(PwidthError, ValueError):
    """An operation was called outside its documented domain."""


class ParseError(PwidthError, ValueError):
    """Malformed DSL text; carries a line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(PwidthError, ValueError):
    """A structure failed a well-formedness check."""

    def __init__(self, message: str, violations: list | None = None):
        self.violations = list(violations or [])
        super().__init__(message)
