class HerdtrackError(Exception):
    pass


class DegenerateConfiguration(HerdtrackError):
    """Point set cannot determine the requested transform."""


class ProjectiveDegeneracy(HerdtrackError):
    """A point was mapped onto the line at infinity."""


class SingularInnovation(HerdtrackError):
    """Innovation covariance could not be inverted."""


class DegenerateBox(HerdtrackError):
    pass


class InvalidGrid(HerdtrackError):
    pass


class OutOfOrderFrame(HerdtrackError):
    pass


class LengthMismatch(HerdtrackError):
    pass


class ConfigError(HerdtrackError):
    """Scenario file could not be parsed; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class FrameMisalignment(HerdtrackError):
    """Two record streams do not cover the same frame indices."""
