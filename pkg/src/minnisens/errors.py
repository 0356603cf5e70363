"""Exception hierarchy shared by every module."""


class SensitivityError(ValueError):
    """Base class for domain errors (bad input, degenerate data, undefined quantities)."""


class DegenerateSummaryError(SensitivityError):
    """The observed summary does not support the requested analysis."""


class NoAnalysisNeeded(SensitivityError):
    """Nothing is missing, so the observed mean is the marginal mean."""

    def __init__(self, message="no analysis needed: frac_missing = 0"):
        super().__init__(message)


class CalibrationError(SensitivityError):
    """The response-surface equations could not be solved consistently."""


class DiscordantAssociationError(SensitivityError):
    """Categorical ratio bound requested where its ordering hypothesis fails."""
