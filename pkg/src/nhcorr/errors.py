"""Typed errors raised by numerical preconditions across the package."""


class NhcorrError(Exception):
    """Base class for all package-specific failures."""


class NotHermitian(NhcorrError):
    """Input required to be Hermitian (within tolerance) is not."""


class NotFullRank(NhcorrError):
    """Spectral floor violated: an eigenvalue sits at or below the cutoff."""


class NotPositiveDefinite(NhcorrError):
    """Input required to be positive definite is not."""


class PTBroken(NhcorrError):
    """Metric construction attempted past the exceptional point (gamma >= g)."""


class VanishingTrajectory(NhcorrError):
    """Trajectory norm fell below the underflow floor; the conditional
    evolution occurs with probability (numerically) zero."""


class MetricDivergence(NhcorrError):
    """|Tr[rho eta]| below the divergence floor; the metric-weighted state
    is undefined."""


class OperatorNormExceedsOne(NhcorrError):
    """POVM element with operator norm above 1 cannot be a valid measurement."""


class TooManyParts(NhcorrError):
    """Partition enumeration requested beyond the supported arity."""


class PositivityFailure(NhcorrError):
    """No admissible mixing weight produced a positive semidefinite state."""


class ConfigError(NhcorrError):
    """Experiment configuration is malformed; message names the offending key."""
