"""Exception hierarchy shared by every module."""


class OverdampError(Exception):
    """Base class for all errors raised by overdamp."""


class DomainError(OverdampError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(OverdampError, ValueError):
    """A configuration violates one of its invariants."""


class ConfigParseError(ConfigError):
    """A config text could not be parsed; carries the offending key and line."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class SingularityError(OverdampError, ArithmeticError):
    """An unregularized kernel was evaluated at coincident particles."""

    def __init__(self, i=None, j=None, t=None):
        self.i = None if i is None else int(i)
        self.j = None if j is None else int(j)
        self.t = t
        if self.i is None:
            msg = "singular kernel evaluation at r = 0 with eps = 0"
        else:
            msg = f"singular kernel evaluation for particle pair ({self.i}, {self.j})"
        if t is not None:
            msg += f" at t={t!r}"
        super().__init__(msg)


class CapacityError(OverdampError):
    """The problem size exceeds what an exact solver accepts."""
