"""Exception types shared across the package."""


class ModelViolation(ValueError):
    """A value breaks a structural invariant of the generator model."""


class ConfigurationError(ValueError):
    """A user-supplied setting is invalid."""


class StaleSolutionError(ValueError):
    """A clustering solution no longer matches the problem's current shape.

    Raised after the number of variables or clusters changed, so harnesses can
    repair the solution instead of silently truncating it.
    """


class RunComplete(Exception):
    """The engine reached its tick budget."""


class UnsupportedExport(ValueError):
    """The requested export is not defined for the current state."""
