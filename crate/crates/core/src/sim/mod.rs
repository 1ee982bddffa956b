//! Synthetic data generation and the scenario × replicate × model study.

pub mod generate;
pub mod scenario;
pub mod study;

pub use generate::{
    generate_dataset, make_true_risk, make_true_risk_with, sample_smooth_field,
    sample_smooth_field_with, Truth,
};
pub use scenario::{
    default_high_region, LatticeShape, Scenario, ScenarioSet, DEFAULT_EPS_SIM, DEFAULT_GMRF_TAU2,
    DEFAULT_NOISE_SD,
};
pub use study::{
    chain_seed, data_seed, fit_replicate, run_study, score, MetricSummary, ReplicateFailure,
    ReplicateResult, Scores, StudyResult, StudyRow, SPECIFICITY_THRESHOLD,
};
