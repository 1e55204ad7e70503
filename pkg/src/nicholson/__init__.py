"""Stochastic Nicholson's blowflies delay equation with Markovian regime switching.

Exact regime-path sampling, positivity-preserving and Euler-Maruyama
integration of the delayed diffusion, every derived constant and theorem
bound, and Monte Carlo verification of those bounds.
"""

from .bounds import (
    TheoremBounds,
    compute_theorem_bounds,
    kappa_for_model,
    kappa_root,
    lambda_rate,
    lemma1_bound,
    lemma2_c,
    nstar,
    theorem22_bounds,
    theorem23_bounds,
)
from .config import OutputConfig, RunConfig, dump_config, load_config, parse_config
from .ctmc import (
    RegimePath,
    StationaryDistribution,
    is_irreducible,
    occupation_fractions,
    sample_path,
    stationary_distribution,
)
from .ensemble import (
    BoundCheck,
    BoundReport,
    ConvergenceRow,
    EnsembleConfig,
    EnsembleStats,
    convergence_study,
    run_ensemble,
    verify_bounds,
)
from .errors import (
    AlphaOutOfRangeError,
    ConfigError,
    HistoryRangeError,
    MismatchedConfigError,
    ModelValidationError,
    NicholsonError,
    NonDyadicRefinementError,
    NonPositiveMuError,
    NonUniformDelayError,
    ReducibleError,
    SingularSystemError,
    ThetaOutOfRangeError,
    Violation,
)
from .integrators import (
    TrajectoryGrid,
    history_lookup,
    simulate_em,
    simulate_voc,
)
from .model import (
    DerivedConstants,
    GeneratorMatrix,
    InitialHistory,
    ModelSpec,
    RegimeParams,
    ValidatedModel,
    derived_constants,
    theta_upper_bound,
    validate_model,
)
from .noise import NoiseRecord, NoiseStream, substream

__all__ = [
    "AlphaOutOfRangeError", "BoundCheck", "BoundReport", "ConfigError",
    "ConvergenceRow", "DerivedConstants", "EnsembleConfig", "EnsembleStats",
    "GeneratorMatrix", "HistoryRangeError", "InitialHistory",
    "MismatchedConfigError", "ModelSpec", "ModelValidationError",
    "NicholsonError", "NoiseRecord", "NoiseStream", "NonDyadicRefinementError",
    "NonPositiveMuError", "NonUniformDelayError", "OutputConfig",
    "ReducibleError", "RegimeParams", "RegimePath", "RunConfig",
    "SingularSystemError", "StationaryDistribution", "TheoremBounds",
    "ThetaOutOfRangeError", "TrajectoryGrid", "ValidatedModel", "Violation",
    "compute_theorem_bounds", "convergence_study", "derived_constants",
    "dump_config", "history_lookup", "is_irreducible", "kappa_for_model",
    "kappa_root", "lambda_rate", "lemma1_bound", "lemma2_c", "load_config",
    "nstar", "occupation_fractions", "parse_config", "run_ensemble",
    "sample_path", "simulate_em", "simulate_voc", "stationary_distribution",
    "substream", "theorem22_bounds", "theorem23_bounds", "theta_upper_bound",
    "validate_model", "verify_bounds",
]
