"""Exception types."""


class FmpmError(Exception):
    pass


class ConfigError(FmpmError):
    """Invalid configuration (bad option values, inconsistent BCs, ...)."""


class OutsideGridError(FmpmError):
    """A particle's shape-function support left the background grid."""

    def __init__(self, particle, position):
        self.particle = int(particle)
        self.position = position
        super().__init__(f"particle {particle} at {position} has support outside the grid")
