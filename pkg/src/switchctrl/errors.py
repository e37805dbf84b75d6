"""Exception hierarchy shared by the library and the command-line front-end."""


class SwitchCtrlError(Exception):
    """Base class for all errors raised by :mod:`switchctrl`."""


class ConfigError(SwitchCtrlError, ValueError):
    """Invalid system description. ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class DimensionError(SwitchCtrlError, ValueError):
    pass


class NumericalError(SwitchCtrlError, ArithmeticError):
    """A computation left its domain of validity (exit code 2 in the CLI)."""


class PSDViolation(NumericalError):
    def __init__(self, level, mode, time, eigenvalue):
        self.level = level
        self.mode = mode
        self.time = time
        self.eigenvalue = eigenvalue
        super().__init__(
            f"Riccati iterate lost positive semi-definiteness at level {level}, "
            f"mode {mode!r}, t={time:.6g} (min eigenvalue {eigenvalue:.3e})"
        )


class BlowUpError(NumericalError):
    pass


class SingularGramianError(NumericalError):
    pass
