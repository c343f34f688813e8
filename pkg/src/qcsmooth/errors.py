"""Exception hierarchy. Every error raised on purpose derives from
``QCSmoothError`` so callers (and the CLI) can map them to exit codes."""


class QCSmoothError(Exception):
    pass


class UsageError(QCSmoothError, ValueError):
    """Bad arguments: unknown criterion, mismatched stencil, bad tolerance."""


class DegenerateElementError(QCSmoothError, ValueError):
    pass


class EmptyDomainError(QCSmoothError):
    pass


class TopologyError(QCSmoothError):
    """Open or inconsistent vertex star."""


class NotSmoothableError(QCSmoothError):
    """Boundary or fixed vertex passed where a movable one is required."""


class ValidationError(QCSmoothError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParseError(QCSmoothError, ValueError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)
        self.path = path
        self.line = line
