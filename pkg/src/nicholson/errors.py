"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class NicholsonError(Exception):
    """Base class for all errors raised by this package."""


@dataclass(frozen=True)
class Violation:
    """A single model-validation failure.

    ``code`` is a stable machine-readable label (e.g. ``DimensionMismatch``,
    ``NonGenerator``, ``NonPositiveHistory``, ``InvalidParameter``);
    ``message`` names the offending field and value.
    """

    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ModelValidationError(NicholsonError):
    """Raised with the complete list of violations, not just the first."""

    def __init__(self, violations: list[Violation]):
        self.violations = tuple(violations)
        super().__init__(
            "model validation failed:\n" + "\n".join(f"  - {v}" for v in violations)
        )


class ReducibleError(NicholsonError):
    """The switching chain is not irreducible but an invariant distribution was requested."""


class SingularSystemError(NicholsonError):
    """The balance equations for the invariant distribution are numerically degenerate."""


class ThetaOutOfRangeError(NicholsonError):
    """Moment order outside the admissible interval [1, 1 + 2*rho_hat)."""


class AlphaOutOfRangeError(NicholsonError):
    """Rate constant alpha outside (0, beta_hat)."""


class HistoryRangeError(NicholsonError):
    """Lookup time outside the computed portion of a trajectory."""


class NonUniformDelayError(NicholsonError):
    """Decay-rate calculation requires a single delay (and saturation constant) across regimes."""


class NonPositiveMuError(NicholsonError):
    """Decay-rate calculation requires mu_hat > 0."""


class NonDyadicRefinementError(NicholsonError):
    """Step sizes of a convergence study must halve the coarsest by powers of two."""


class MismatchedConfigError(NicholsonError):
    """Ensemble statistics and analytic bounds were computed under different settings."""


class ConfigError(NicholsonError):
    """Configuration file is malformed; the message names the offending field."""
