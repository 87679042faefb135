"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numeric and capability failures with 3.
"""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(RuntimeError):
    """A numeric procedure failed to converge or produced invalid values."""


class CapabilityError(NotImplementedError):
    """The requested combination of inputs has no implemented route.

    Raised e.g. when the closed-form oracle is asked for a spatial kernel
    or initial condition it cannot integrate; the Monte Carlo estimators
    remain available for those inputs.
    """


class ConfigError(ValueError):
    """A run configuration failed validation."""
