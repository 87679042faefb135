"""Second moments of the stochastic heat equation with fractional-in-time,
colored-in-space noise: planar-Poisson Feynman-Kac Monte Carlo estimators
cross-validated against a truncated chaos-series quadrature oracle."""

from .chaos_oracle import (
    QueryPoint,
    SeriesResult,
    alpha_n_quadrature,
    inner_product_closed_form,
    second_moment_series,
    truncation_tail,
    white_noise_order_term,
)
from .errors import CapabilityError, ConfigError, DomainError, NumericError
from .gaussian_paths import (
    DifferenceCovariance,
    PathValues,
    difference_covariance,
    gaussian_product_expectation,
    sample_brownian_at,
)
from .kernels import (
    Constant,
    GaussianBump,
    HeatKernel,
    PoissonKernel,
    RieszKernel,
    SpatialKernel,
    TemporalKernel,
    ZeroKernel,
    heat_density,
    initial_field,
)
from .mc_engine import (
    EstimatorConfig,
    MomentEstimate,
    estimate_inner_product_mc,
    estimate_order_contribution,
    estimate_second_moment_fractional,
    estimate_second_moment_white,
)
from .point_process import (
    PlanarRealization,
    Rectangle,
    RestrictedPointSample,
    count_rectangle,
    mc_hypercube_integral,
    sample_global,
    sample_linear_jump_times,
    sample_restricted,
    sample_restricted_importance,
    sample_temporal_importance,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "ConfigError",
    "Constant",
    "DifferenceCovariance",
    "DomainError",
    "EstimatorConfig",
    "GaussianBump",
    "HeatKernel",
    "MomentEstimate",
    "NumericError",
    "PathValues",
    "PlanarRealization",
    "PoissonKernel",
    "QueryPoint",
    "Rectangle",
    "RestrictedPointSample",
    "RieszKernel",
    "SeriesResult",
    "SpatialKernel",
    "TemporalKernel",
    "ZeroKernel",
    "alpha_n_quadrature",
    "count_rectangle",
    "difference_covariance",
    "estimate_inner_product_mc",
    "estimate_order_contribution",
    "estimate_second_moment_fractional",
    "estimate_second_moment_white",
    "gaussian_product_expectation",
    "heat_density",
    "initial_field",
    "inner_product_closed_form",
    "mc_hypercube_integral",
    "sample_brownian_at",
    "sample_global",
    "sample_linear_jump_times",
    "sample_restricted",
    "sample_restricted_importance",
    "sample_temporal_importance",
    "second_moment_series",
    "truncation_tail",
    "white_noise_order_term",
]
