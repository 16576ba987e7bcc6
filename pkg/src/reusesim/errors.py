"""Exception types shared by the simulator modules."""


class ReuseSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(ReuseSimError, ValueError):
    """Invalid configuration, generator spec or simulation input."""


class TraceParseError(ReuseSimError, ValueError):
    """A trace line could not be decoded."""

    def __init__(self, message, lineno=None, field=None):
        self.lineno = lineno
        self.field = field
        where = []
        if lineno is not None:
            where.append("line %d" % lineno)
        if field is not None:
            where.append("field %r" % field)
        if where:
            message = "%s: %s" % (", ".join(where), message)
        super().__init__(message)


class MetricError(ReuseSimError, ValueError):
    """A derived metric is undefined for the given counters."""


class LogicError(ReuseSimError, RuntimeError):
    """Internal invariant violated or an operation misused (e.g. bad way index)."""
