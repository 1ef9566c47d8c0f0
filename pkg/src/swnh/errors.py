"""Exception hierarchy shared by the solver and the command line."""


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


class NumericalError(RuntimeError):
    """The discrete problem could not be advanced."""


class CFLViolation(NumericalError):
    """A cell depth became negative during an explicit update."""


class SingularSystemError(NumericalError):
    """The pressure system has a vanishing pivot."""
