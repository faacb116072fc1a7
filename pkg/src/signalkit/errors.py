"""Exception hierarchy shared by all modules."""


class SignalKitError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class DimensionError(SignalKitError, ValueError):
    pass


class InvalidSchemeError(SignalKitError, ValueError):
    pass


class NetSizeError(SignalKitError):
    pass


class ContractViolation(SignalKitError):
    """An oracle or caller broke a documented contract."""


class NumericalFailure(SignalKitError):
    pass


class DisconnectedError(SignalKitError, ValueError):
    pass


class ParseError(SignalKitError, ValueError):
    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
