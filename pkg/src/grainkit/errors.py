"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: parameter/contract problems -> 2,
data/file problems -> 3, numeric failures -> 4.
"""


class GrainkitError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(GrainkitError):
    """An argument or configuration value is outside its documented domain."""


class ContractError(GrainkitError):
    """An operation was called with inputs violating its shape/presence contract."""


class ScaleError(ContractError):
    """Image too small for the requested number of multiscale levels."""


class DataError(GrainkitError):
    """Files, datasets or manifests are missing, unreadable or inconsistent."""


class NumericError(GrainkitError):
    """A computation produced NaN/Inf or diverged."""
