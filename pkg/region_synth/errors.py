"""Exception hierarchy. Each error knows the process exit code the CLI reports for it."""

from typing import Any


class RegionSynthError(Exception):
    exit_code = 1


class ConfigError(RegionSynthError):
    """Unknown config key, unparsable value or invalid setting."""

    exit_code = 1


class DataError(RegionSynthError):
    exit_code = 2


class MalformedFileError(DataError):
    """A feature or semantic-vector file could not be parsed."""


class NumericError(RegionSynthError):
    exit_code = 3


class NonFiniteError(NumericError):
    """A forward op produced NaN or Inf from finite inputs."""


class OracleError(NumericError):
    """The finite-difference oracle saw a non-finite function value."""


class NonFiniteLossError(NumericError):
    """Training diverged. Carries the step index and the loss terms at that step."""

    def __init__(self, step: int, terms: dict[str, Any]):
        self.step = step
        self.terms = dict(terms)
        rendered = ", ".join(f"{k}={v}" for k, v in self.terms.items())
        super().__init__(f"non-finite loss at step {step}: {rendered}")


class DimensionError(NumericError, ValueError):
    pass


class ContractError(NumericError, ValueError):
    pass


class NormalizationError(NumericError, ValueError):
    """Cosine similarity requested for a zero-norm feature."""


class SamplingInfeasibleError(NumericError, ValueError):
    """Rejection sampling of negative noise vectors exceeded its trial cap."""
