"""Exception types shared across the package."""

from __future__ import annotations


class TrifactorError(Exception):
    """Base class for errors raised by this package."""


class PanelDataError(TrifactorError):
    """Input data is malformed, unbalanced or otherwise unusable."""


class ConfigError(TrifactorError):
    """A configuration value is out of range for the data it is applied to."""


class NumericError(TrifactorError):
    """A numeric routine could not produce a reliable result."""
