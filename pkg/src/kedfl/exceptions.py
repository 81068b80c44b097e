class KedflError(Exception):
    """Base class for errors raised by kedfl."""


class ScenarioError(KedflError, ValueError):
    """Invalid geometry or body configuration (e.g. degenerate separation)."""


class SchemaError(KedflError, ValueError):
    """A scenario or measurement document does not match its schema.

    ``pointer`` is a JSON-pointer-like path to the offending key.
    """

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


class QuadratureError(KedflError, RuntimeError):
    """An integral failed to converge within the panel budget."""


class CapabilityError(KedflError, ValueError):
    """The request exceeds an engine's body-count cap or a cost guard."""


class CalibrationError(KedflError, RuntimeError):
    """The size fit diverged or has no information to work with.

    ``last`` holds the last iterate as a :class:`CalibrationResult` when one
    exists.
    """

    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last
