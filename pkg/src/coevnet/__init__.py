"""Coevolution regression models for longitudinal network and attribute data.

A network series Y_0..Y_n and a nodal attribute series X_0..X_n evolve as a
pair of coupled autoregressions: relations respond to attribute similarity
(homophily) and attributes respond to neighbors' attributes (contagion).
The package provides the closed-form Gaussian MLE, Gibbs samplers for the
Bayesian, latent-attribute, and ordinal-probit variants, forward simulation,
forecasting, and MCMC diagnostics.
"""

from .data import (
    AttributeSeries,
    CoevError,
    CovariateSpec,
    DataFormatError,
    InsufficientDataError,
    McrParams,
    ModelMode,
    NetworkSeries,
    NumericalError,
    RankDeficiencyError,
    StabilityError,
    ValidationError,
    dyad_index,
    dyad_pairs,
    n_dyads,
)
from .design import (
    attribute_design_row,
    homophily_regressor,
    network_design_row,
    unvech,
    vech,
)
from .diagnostics import (
    DecompositionReport,
    ForecastComparison,
    effective_sample_size,
    forecast_study,
    posterior_quantiles,
    sum_of_squares_decomposition,
)
from .distributions import truncated_normal
from .gibbs import (
    GibbsState,
    PosteriorSamples,
    PriorSpec,
    run_chain,
    step_b,
    step_beta,
    step_Sigma,
    step_sigma2,
)
from .latent import (
    align_latent_draws,
    fit_latent,
    latent_full_conditional,
    step_latent_sweep,
)
from .mle import (
    MleFit,
    NormalEquations,
    accumulate_attribute_normal_equations,
    accumulate_network_normal_equations,
    fit_mle,
    solve_attribute_mle,
    solve_network_mle,
)
from .ordinal import (
    fit_ordinal,
    rank_bounds,
    step_thresholds,
    step_w_sweep,
    step_z_sweep,
    w_full_conditional,
    z_full_conditional,
)
from .simulate import SimConfig, forecast_one_step, gaussian_loglik, simulate

__version__ = "0.1.0"

__all__ = [
    "AttributeSeries", "CoevError", "CovariateSpec", "DataFormatError",
    "DecompositionReport", "ForecastComparison", "GibbsState",
    "InsufficientDataError", "McrParams", "MleFit", "ModelMode",
    "NetworkSeries", "NormalEquations", "NumericalError", "PosteriorSamples",
    "PriorSpec", "RankDeficiencyError", "SimConfig", "StabilityError",
    "ValidationError",
    "accumulate_attribute_normal_equations",
    "accumulate_network_normal_equations", "align_latent_draws",
    "attribute_design_row", "dyad_index", "dyad_pairs",
    "effective_sample_size", "fit_latent", "fit_mle", "fit_ordinal",
    "forecast_one_step", "forecast_study", "gaussian_loglik",
    "homophily_regressor", "latent_full_conditional", "n_dyads",
    "network_design_row", "posterior_quantiles", "rank_bounds", "run_chain",
    "simulate", "solve_attribute_mle", "solve_network_mle", "step_b",
    "step_beta", "step_Sigma", "step_sigma2", "step_latent_sweep",
    "step_thresholds", "step_w_sweep", "step_z_sweep",
    "sum_of_squares_decomposition", "truncated_normal", "unvech", "vech",
    "w_full_conditional", "z_full_conditional",
]
