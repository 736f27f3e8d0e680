"""Exception hierarchy shared by the library and the CLI."""


class RotorError(Exception):
    """Base class for all domain errors raised by rotorwp."""


class InvalidArgumentError(RotorError, ValueError):
    pass


class TruncationError(RotorError):
    """The hard cap on I was reached before the weight threshold."""

    def __init__(self, captured_weight, i_cap):
        self.captured_weight = float(captured_weight)
        self.i_cap = int(i_cap)
        super().__init__(
            f"truncation cap I_max={i_cap} reached with captured weight "
            f"{captured_weight:.15g}"
        )


class MissingLevelError(RotorError, KeyError):
    def __init__(self, level):
        self.level = int(level)
        super().__init__(f"energy model has no level for I={level}")

    def __str__(self):
        return self.args[0]


class DegenerateSpectrumError(RotorError):
    pass


class UnsupportedModelError(RotorError):
    pass


class SymmetryViolationError(RotorError):
    pass


class InsufficientDataError(RotorError):
    pass


class InvalidPairError(RotorError):
    pass


class FormatError(RotorError):
    pass


class EmptyPacketError(RotorError):
    pass
