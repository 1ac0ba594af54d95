"""Exception types shared across the package."""


class SpikegridError(Exception):
    """Base class for all spikegrid errors."""


class ConfigError(SpikegridError):
    """Invalid configuration value or combination."""


class FrameError(SpikegridError):
    """Malformed wire frame. Carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class TransportError(SpikegridError):
    """Endpoint failure: disconnect, timeout, or send on a closed route."""


class ProtocolError(SpikegridError):
    """Worker divergence: a batch arrived for an unexpected epoch."""
