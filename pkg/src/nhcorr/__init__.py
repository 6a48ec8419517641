"""Connected correlators, lightcones, and entanglement bounds for
non-Hermitian spin chains."""

from . import correlators, entanglement, evolution, lightcone, linalg, model, states
from .errors import (
    ConfigError,
    MetricDivergence,
    NhcorrError,
    NotFullRank,
    NotHermitian,
    NotPositiveDefinite,
    OperatorNormExceedsOne,
    PositivityFailure,
    PTBroken,
    TooManyParts,
    VanishingTrajectory,
)
from .model import TfimParams, build_nh_tfim, build_quasi_hermitian

__version__ = "0.1.0"
