"""Exception hierarchy shared across the testbed."""

from __future__ import annotations


class K4IError(Exception):
    """Base class for all testbed errors."""


class ValidationError(K4IError):
    """One or more validation failures, each with a path into the offending document.

    ``problems`` is a list of (path, message) tuples; validators collect every
    failure before raising so callers can report all of them at once.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.problems]
        super().__init__("; ".join(lines))


class ProgramParseError(K4IError):
    """Control-program source rejected; carries the 1-based line/column."""

    def __init__(self, message, line, column=1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, col {column}: {message}")


class RangeError(K4IError):
    """Value outside its documented domain."""


class CapacityError(K4IError):
    """A fixed-size resource (register table, payload) overflowed."""


class ProtocolError(K4IError):
    """Malformed protocol traffic that cannot be answered on the wire."""


class IncompleteFrameError(ProtocolError):
    """Not enough bytes yet for a full frame; retry with more input."""


class TransportError(K4IError):
    """No route / connection to the requested endpoint."""


class RequestTimeout(K4IError):
    """No matching response arrived within the deadline."""


class ConflictError(K4IError):
    """Duplicate identifier or colliding resource."""


class RoutingError(K4IError):
    """Frame addressed to an endpoint the switch does not know."""


class StartupError(K4IError):
    """Testbed instantiation failed (port collision, resource exhaustion)."""


class LifecycleError(K4IError):
    """Operation invoked on a handle in the wrong lifecycle state."""
