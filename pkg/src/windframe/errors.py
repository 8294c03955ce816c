"""Shared exception types."""


class WindframeError(Exception):
    """Base class for package errors."""


class InvalidSpecError(WindframeError, ValueError):
    """A distribution or model specification is not usable as given."""


class ConfigurationError(WindframeError):
    """Run configuration or catalog is incomplete or inconsistent."""


class FitError(WindframeError):
    """A statistical fit could not be performed on the given data."""


class InputError(WindframeError, ValueError):
    """Invalid numerical input to an operation."""


class ModelStateError(WindframeError):
    """Operation requires a fitted/initialized model that is not available."""


class EstimationError(WindframeError):
    """Rate estimation cannot proceed (e.g. an empty stratum)."""
