//! Data container, model specification and the closed-form densities.

pub mod data;
pub mod density;
pub mod spec;

pub use data::Dataset;
pub use density::{
    beta_log_prior, cell_log_likelihood, edge_precision_log_det, expected_counts,
    inverse_gamma_log_density, log_likelihood, log_likelihood_with, logit, logit_inv,
    partial_correlation, v_log_prior, v_log_prior_normalized, v_prior_sums, w_prior_density_curve,
    w_prior_log_density, MAX_LINEAR_PREDICTOR,
};
pub use spec::{InverseGamma, ModelSpec, ModelVariant, ParameterState};
