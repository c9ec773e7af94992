//! Paired-comparison models with Student-t preference curves and Bayesian
//! estimation of object worths by deterministic grid quadrature.

pub mod bayes;
pub mod data;
pub mod inference;
pub mod matrix;
pub mod model;
pub mod special;

pub use bayes::{
    fisher_information, jeffreys_log_prior, log_likelihood, log_likelihood_gradient, log_posterior_kernel,
    marginal_posterior, posterior_mean, posterior_mode, EstimationError, GridSpec, MarginalCurve, Posterior,
    PosteriorSpec, PosteriorSummary, Prior, Warning,
};
pub use data::{load_counts, CountFormat, DataError, PairedComparisonData};
pub use inference::{
    chi_square_gof, expected_frequencies, fit, preference_matrix, predictive_matrix, rank_objects, EstimateReport,
    Estimator, FitReport, GofError, GofResult, Ranking,
};
pub use matrix::PairMatrix;
pub use model::{preference_probability, t_density, ModelError, ModelSpec, WorthVector};
pub use special::{chi_square_sf, log_gamma, normal_cdf, reg_inc_beta, BetaParams, DomainError};
