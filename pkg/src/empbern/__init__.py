"""Empirical Bernstein bounds for dependent Hilbert-space valued time series."""
from .blocks import BlockSchedule, block_sums, build_schedule, enumerate_pairs, pair_set_sizes
from .bounds import (
    BoundReport,
    bound_cov_bernstein,
    bound_cov_ps,
    bound_iid_biased,
    bound_iid_unbiased,
    bound_thm1,
    bound_thm2,
    bound_thm3,
    risk_bound_ivanov,
    risk_bound_tikhonov,
)
from .correlations import (
    VarianceProxy,
    corr_biased,
    corr_population,
    corr_population_stationary,
    corr_unbiased,
    scalar_block_variance,
)
from .covariance import CovarianceBound
from .kernels import (
    GaussianKernel,
    GramMatrix,
    LinearKernel,
    covariance_operator_gram,
    crosscov_operator_gram,
    gram,
)
from .mixing import MixingModel, adjusted_delta, adjusted_delta_lagged, beta, min_feasible_tau
from .processes import (
    Trajectory,
    one_hot_embed,
    sample_noisy_cycle,
    sample_ou,
    true_cov_error_sq,
)
from .regression import (
    FeatureData,
    GaussianGridFeatures,
    OperatorModel,
    ReducedRankRegressor,
    assemble_covariances,
    empirical_risk,
    fit_rrr,
    forecast,
    model_select,
)

__version__ = "0.1.0"
