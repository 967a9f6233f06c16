"""Exception hierarchy shared across the toolchain."""


class QlowerError(Exception):
    """Base class for all toolchain errors."""


class DomainError(QlowerError):
    """A precondition on argument values was violated."""


class DimensionError(QlowerError):
    """Incompatible shapes, naming the offending layer where known."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class ParseError(QlowerError):
    """Malformed serialized input, with a location path into the payload."""

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)
        self.location = location


class CapacityError(QlowerError):
    """A materialization would exceed the configured size cap."""

    def __init__(self, message, required=None, cap=None):
        super().__init__(message)
        self.required = required
        self.cap = cap
