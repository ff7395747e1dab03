"""Fluctuation theory of Kendall random walks: closed forms, recurrences and simulation."""

from .algebra import (
    ConvMixture,
    DegenerateBranchError,
    IterIntegralCoeffs,
    conv_cdf,
    conv_point,
    conv_point_cdf,
    conv_power_cdf,
    integral_I,
    integral_II,
    iter_integral_coeffs,
    psi,
    psi_integral,
    transition_cdf,
    truncated_moment,
)
from .fluctuations import (
    LadderCoefficients,
    joint_ladder_cdf,
    ladder_epoch_coeffs,
    ladder_epoch_pmf,
    ladder_height_cdf,
    max_cdf,
    min_cdf,
    weak_desc_epoch_pmf,
)
from .simulator import (
    EstimateWithCI,
    InsufficientHorizonError,
    Statistic,
    WalkConfig,
    WalkPath,
    estimate,
    estimate_curve,
    estimate_many,
    first_passage_above,
    simulate_path,
    walk_step,
)
from .steps import (
    KendallStable,
    StepLaw,
    SymmetricPareto,
    SymmetricPoint,
    Tabulated,
    cdf,
    h_fn,
    invert_williamson,
    sample_step,
    williamson_g,
)

__all__ = [name for name in dir() if not name.startswith("_")]
