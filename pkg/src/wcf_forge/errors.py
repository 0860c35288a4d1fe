"""Exception hierarchy shared by the library and the CLI."""


class WcfError(Exception):
    """Base class for all package errors."""


class InputError(WcfError, ValueError):
    """Malformed numeric input: ordering, degeneracy, out-of-range degree."""


class GeometryError(WcfError, ArithmeticError):
    """A geometric primitive was evaluated where it is undefined."""


class ScheduleError(WcfError, RuntimeError):
    """An iteration precondition failed while running a schedule."""
