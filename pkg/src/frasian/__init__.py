"""frasian: prediction regions, CDF bands, and weighted multiple testing.

Three constructions sharing one theme — what Bayesian machinery can and
cannot promise in frequentist terms:

* conformalized prediction regions built from a conjugate normal
  predictive density, valid in finite samples even under a wrong prior
  (:mod:`frasian.conformal`);
* DKW confidence bands versus Dirichlet-process credible bands for a CDF,
  including the coverage breakdown of the latter under prior-data conflict
  (:mod:`frasian.bands`);
* weighted Bonferroni testing with power-optimal Normal-means weights
  (:mod:`frasian.multitest`);

plus deterministic numerical primitives (:mod:`frasian.special`),
splittable seeding (:mod:`frasian.rng`), and seeded Monte Carlo studies
(:mod:`frasian.experiments`) surfaced through the ``frasian`` CLI.
"""

from ._validation import (
    check_alpha,
    check_finite_array,
    check_means,
    check_nonnegative,
    check_positive,
    check_pvalues,
    check_weights,
)
from .bands import (
    CdfBand,
    CdfBandEstimator,
    DiscreteCdf,
    DpBandConfig,
    DpPosterior,
    DpPrior,
    band_coverage,
    band_grid,
    dkw_band,
    dkw_epsilon,
    dp_posterior,
    dp_posterior_band,
    sample_dp,
)
from .conformal import (
    ConjugateNormalModel,
    GridSpec,
    PosteriorState,
    PredictionRegion,
    PredictiveRegion,
    bayes_predictive_interval,
    conformal_pvalue,
    posterior_update,
    prediction_region,
    predictive_density,
    predictive_params,
    sweep_points,
)
from .experiments import (
    conformal_coverage_study,
    fig1_panels,
    fig1_study,
    pvalue_rank_counts,
    region_length_study,
)
from .multitest import (
    RejectionSet,
    WeightedBonferroni,
    WeightSolverError,
    average_optimal_weights,
    bonferroni,
    fwer_simulate,
    optimal_weights,
    weighted_bonferroni,
)
from .report import SimulationReport
from .rng import RngSeed
from .special import (
    NormalParams,
    ecdf_eval,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    normal_survivor,
    sample_beta,
    sample_normal,
    sample_uniform,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # rng / report
    "RngSeed",
    "SimulationReport",
    # special functions and sampling
    "NormalParams",
    "normal_pdf",
    "normal_cdf",
    "normal_survivor",
    "normal_quantile",
    "sample_normal",
    "sample_beta",
    "sample_uniform",
    "ecdf_eval",
    # conformal prediction
    "ConjugateNormalModel",
    "PosteriorState",
    "GridSpec",
    "PredictionRegion",
    "PredictiveRegion",
    "posterior_update",
    "predictive_params",
    "predictive_density",
    "conformal_pvalue",
    "sweep_points",
    "prediction_region",
    "bayes_predictive_interval",
    # CDF bands
    "DpPrior",
    "DpPosterior",
    "DiscreteCdf",
    "CdfBand",
    "CdfBandEstimator",
    "DpBandConfig",
    "dkw_epsilon",
    "dkw_band",
    "band_grid",
    "dp_posterior",
    "sample_dp",
    "dp_posterior_band",
    "band_coverage",
    # multiple testing
    "RejectionSet",
    "WeightSolverError",
    "WeightedBonferroni",
    "bonferroni",
    "weighted_bonferroni",
    "optimal_weights",
    "average_optimal_weights",
    "fwer_simulate",
    # experiments
    "region_length_study",
    "conformal_coverage_study",
    "pvalue_rank_counts",
    "fig1_panels",
    "fig1_study",
    # validation helpers
    "check_alpha",
    "check_positive",
    "check_nonnegative",
    "check_finite_array",
    "check_pvalues",
    "check_weights",
    "check_means",
]
