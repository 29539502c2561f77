"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside the regime a routine supports."""


class DivergentMomentError(ValueError):
    """A requested moment does not exist (heavy tail without cutoff)."""


class BracketError(ValueError):
    """A root-finding bracket does not enclose a sign change."""


class VolumeRangeError(ValueError):
    """A volume query falls outside the solved range of a book or table."""
