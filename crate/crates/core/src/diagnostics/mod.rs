//! Posterior summaries and evaluation metrics.

pub mod boundary;
pub mod fit;
pub mod roc;
pub mod spatial;

pub use boundary::{classify_boundaries, step_change_probs, BoundaryReport};
pub use fit::{
    coverage95, dic_from_parts, dic_pd, fitted_risk, poisson_deviance, quantile, quantile_sorted,
    risk_draws, risk_summaries, rmse, stable_mean, Dic, FitReport, Summary,
};
pub use roc::{auc_exact, operating_point, roc_auc, specificity, RocCurve, RocPoint};
pub use spatial::{morans_i, sir, MoransI, Sir};
