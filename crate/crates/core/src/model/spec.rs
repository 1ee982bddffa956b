use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::density::logit_inv;
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;

/// Which spatial smoothing model to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Leroux CAR with AR(1) time dependence; all border weights fixed at 1
    /// and a spatial mixing parameter `ρ` estimated.
    GlobalAR,
    /// Border weights estimated with independent logit-normal priors (`ρ = 0`).
    AdaptiveIndependent,
    /// Border weights estimated with a Leroux prior over border adjacency.
    AdaptiveClustered,
}

impl ModelVariant {
    pub fn is_adaptive(self) -> bool {
        !matches!(self, ModelVariant::GlobalAR)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::GlobalAR => "global",
            ModelVariant::AdaptiveIndependent => "adaptive",
            ModelVariant::AdaptiveClustered => "adaptive-clustered",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(ModelVariant::GlobalAR),
            "adaptive" => Ok(ModelVariant::AdaptiveIndependent),
            "adaptive-clustered" => Ok(ModelVariant::AdaptiveClustered),
            other => Err(Error::domain("model", format!("unknown model '{other}'"))),
        }
    }
}

/// Inverse-gamma `(shape, scale)` hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGamma {
    pub const fn new(shape: f64, scale: f64) -> Self {
        InverseGamma { shape, scale }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if self.shape > 0.0 && self.scale > 0.0 && self.shape.is_finite() && self.scale.is_finite()
        {
            Ok(())
        } else {
            Err(Error::domain(
                name,
                format!(
                    "inverse-gamma ({}, {}) needs positive parameters",
                    self.shape, self.scale
                ),
            ))
        }
    }
}

/// Model variant plus prior hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    /// Prior variance of every regression coefficient.
    pub prior_var_beta: f64,
    pub prior_tau2: InverseGamma,
    pub prior_zeta2: InverseGamma,
    /// Fixed prior mean of the border-weight logits.
    pub mu: f64,
    /// Ridge added to the spatial precision (and to the border precision
    /// when normalizing the clustered prior).
    pub epsilon: f64,
    /// Border-weight logits live in `[-v_bound, v_bound]`.
    pub v_bound: f64,
}

impl ModelSpec {
    pub fn new(variant: ModelVariant) -> Self {
        ModelSpec {
            variant,
            prior_var_beta: 10_000.0,
            prior_tau2: InverseGamma::new(0.001, 0.001),
            prior_zeta2: InverseGamma::new(0.001, 0.001),
            mu: 15.0,
            epsilon: 1e-7,
            v_bound: 15.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_var_beta > 0.0 && self.prior_var_beta.is_finite()) {
            return Err(Error::domain(
                "prior_var_beta",
                format!("{} must be positive", self.prior_var_beta),
            ));
        }
        self.prior_tau2.validate("prior_tau2")?;
        self.prior_zeta2.validate("prior_zeta2")?;
        if !self.mu.is_finite() {
            return Err(Error::domain("mu", "must be finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::domain(
                "epsilon",
                format!("{} must be positive", self.epsilon),
            ));
        }
        if !(self.v_bound > 0.0 && self.v_bound < 700.0) {
            return Err(Error::domain(
                "v_bound",
                format!("{} must lie in (0, 700)", self.v_bound),
            ));
        }
        Ok(())
    }
}

/// The full parameter vector of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState {
    pub beta: Vec<f64>,
    pub phi: SpaceTimeField,
    pub tau2: f64,
    pub alpha: f64,
    v_plus: Vec<f64>,
    w_plus: Vec<f64>,
    pub zeta2: f64,
    /// Leroux mixing parameter: spatial for `GlobalAR`, border-prior for
    /// `AdaptiveClustered`, pinned to 0 for `AdaptiveIndependent`.
    pub rho: f64,
    pub mu: f64,
}

impl ParameterState {
    pub fn new(
        beta: Vec<f64>,
        phi: SpaceTimeField,
        tau2: f64,
        alpha: f64,
        v_plus: Vec<f64>,
        zeta2: f64,
        rho: f64,
        mu: f64,
    ) -> Self {
        let w_plus = v_plus.iter().map(|&v| logit_inv(v)).collect();
        ParameterState {
            beta,
            phi,
            tau2,
            alpha,
            v_plus,
            w_plus,
            zeta2,
            rho,
            mu,
        }
    }

    /// Data-driven starting values: log standardized ratios for `φ`, border
    /// weights at one half for adaptive models and at one for the global model.
    pub fn initial(d: &Dataset, spec: &ModelSpec, n_edges: usize) -> Self {
        let p = d.n_covariates();
        let mut beta = vec![0.0; p];
        let total_y: f64 = d.observed().iter().map(|&y| y as f64).sum();
        let total_e: f64 = d.expected().iter().sum();
        let overall = ((total_y + 0.5) / total_e).ln();
        // Put the overall level on the first constant column, if any.
        for r in 0..p {
            let c = d.covariates(0)[r];
            if c != 0.0 && (0..d.n_cells()).all(|cell| d.covariates(cell)[r] == c) {
                beta[r] = overall / c;
                break;
            }
        }
        let offsets = d.linear_offsets(&beta);
        let phi_vals: Vec<f64> = (0..d.n_cells())
            .map(|c| ((d.observed()[c] as f64 + 0.5) / d.expected()[c]).ln() - offsets[c])
            .collect();
        let mean = phi_vals.iter().sum::<f64>() / phi_vals.len() as f64;
        let var = phi_vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / phi_vals.len() as f64;
        let phi = SpaceTimeField::from_vec(d.n_areas(), d.n_times(), phi_vals).expect("cell count");
        let (v_plus, zeta2, rho) = match spec.variant {
            ModelVariant::GlobalAR => (vec![spec.v_bound; n_edges], 1.0, 0.5),
            ModelVariant::AdaptiveIndependent => {
                (vec![0.0; n_edges], (spec.mu * spec.mu).max(1.0), 0.0)
            }
            ModelVariant::AdaptiveClustered => {
                (vec![0.0; n_edges], (spec.mu * spec.mu).max(1.0), 0.5)
            }
        };
        let mut state =
            ParameterState::new(beta, phi, var.max(0.01), 0.5, v_plus, zeta2, rho, spec.mu);
        if spec.variant == ModelVariant::GlobalAR {
            state.w_plus = vec![1.0; n_edges];
        }
        state
    }

    pub fn v_plus(&self) -> &[f64] {
        &self.v_plus
    }

    pub fn w_plus(&self) -> &[f64] {
        &self.w_plus
    }

    /// Sets one border logit and its weight.
    pub fn set_v(&mut self, edge: usize, v: f64) {
        self.v_plus[edge] = v;
        self.w_plus[edge] = logit_inv(v);
    }

    /// Pins every border weight at exactly one (global model).
    pub fn set_unit_weights(&mut self) {
        self.w_plus.iter_mut().for_each(|w| *w = 1.0);
    }

    pub fn check_support(&self, spec: &ModelSpec) -> Result<()> {
        let bad =
            |name: &'static str, v: f64| Err(Error::domain(name, format!("{v} outside support")));
        if !(self.tau2 > 0.0 && self.tau2.is_finite()) {
            return bad("tau2", self.tau2);
        }
        if !(self.zeta2 > 0.0 && self.zeta2.is_finite()) {
            return bad("zeta2", self.zeta2);
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha", self.alpha);
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho", self.rho);
        }
        if spec.variant.is_adaptive() {
            for (&v, &w) in self.v_plus.iter().zip(&self.w_plus) {
                if !(v.abs() <= spec.v_bound) {
                    return bad("v_plus", v);
                }
                if !(w > 0.0 && w < 1.0) {
                    return bad("w_plus", w);
                }
            }
        }
        Ok(())
    }
}
