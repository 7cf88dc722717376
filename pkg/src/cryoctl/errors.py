"""Exception hierarchy shared across the simulator."""


class CryoCtlError(Exception):
    """Base class; ``module`` names the subsystem that raised."""

    module = "core"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module


class ConfigError(CryoCtlError, ValueError):
    """Invalid parameters or configuration values."""


class ParseError(CryoCtlError, ValueError):
    module = "sequencer"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message}, line {line}"
        super().__init__(message)
        self.line = line


class AlignmentError(CryoCtlError, ValueError):
    module = "sequencer"


class ProtocolError(CryoCtlError, RuntimeError):
    module = "sequencer"


class DegenerateCalibrationError(CryoCtlError, ValueError):
    module = "discriminator"


class CapacityExceededError(CryoCtlError, ValueError):
    module = "fdma"

    def __init__(self, requested, maximum):
        super().__init__(
            f"requested {requested} channels but band capacity is {maximum}")
        self.requested = requested
        self.maximum = maximum
