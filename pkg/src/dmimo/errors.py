"""Exception types raised across the toolkit.

Everything derives from ToolkitError so callers can catch this package's
failures with one except clause while still telling the causes apart.
"""


class ToolkitError(Exception):
    """Base class for every error the toolkit raises deliberately."""


class InvalidInputError(ToolkitError):
    """An argument is malformed: bad value range, non-finite entries, ..."""


class DimensionError(InvalidInputError):
    """Array shapes are inconsistent or outside the supported range."""


class RankDeficiencyError(ToolkitError):
    """A channel matrix is too ill-conditioned to invert.

    When raised from a tensor sweep, `snapshot` and `subcarrier` locate the
    offending (t, l) slice.
    """

    def __init__(self, message, snapshot=None, subcarrier=None):
        super().__init__(message)
        self.snapshot = snapshot
        self.subcarrier = subcarrier


class DegenerateUserError(ToolkitError):
    """A user's channel carries no energy; `user` names the row."""

    def __init__(self, message, user=None):
        super().__init__(message)
        self.user = user


class PlacementError(InvalidInputError):
    """User positions violate the scene geometry."""


class InfeasibleLayoutError(ToolkitError):
    """Random user placement exhausted its rejection-sampling budget."""


class TopologyError(InvalidInputError):
    """A subarray request does not fit the access-point inventory."""


class ApCapacityError(TopologyError):
    """An access point has fewer antennas than the selection needs."""


class FormatError(ToolkitError):
    """A channel file is malformed.

    `byte_offset` locates the problem in the file; `expected_size` is set on
    truncation errors so callers can report the size the header promised.
    """

    def __init__(self, message, byte_offset=None, expected_size=None):
        super().__init__(message)
        self.byte_offset = byte_offset
        self.expected_size = expected_size


class EmptySampleError(InvalidInputError):
    """A statistic was requested over zero usable samples."""


class ConfigError(ToolkitError):
    """An experiment configuration is invalid; the message names the field."""
