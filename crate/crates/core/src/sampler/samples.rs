use serde::{Deserialize, Serialize};

use super::config::Family;
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::model::{ModelVariant, ParameterState};

/// Accept/propose counts of one Metropolis family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AcceptanceCount {
    pub accepted: u64,
    pub proposed: u64,
}

impl AcceptanceCount {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub(crate) fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }
}

/// Retained posterior draws, stored draw-major in flat vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcSamples {
    pub variant: ModelVariant,
    pub n_areas: usize,
    pub n_times: usize,
    pub n_edges: usize,
    pub n_covariates: usize,
    pub seed: u64,
    /// Border endpoints in canonical order, one per weight column.
    pub edges: Vec<(usize, usize)>,
    pub beta: Vec<f64>,
    pub tau2: Vec<f64>,
    pub alpha: Vec<f64>,
    pub zeta2: Vec<f64>,
    pub rho: Vec<f64>,
    /// Border weights, `n_edges` per draw.
    pub w: Vec<f64>,
    /// Random effects, `n_areas · n_times` per draw in time-major order.
    pub phi: Vec<f64>,
    /// `−2 log p(Y | β, φ)` at each retained draw.
    pub deviance: Vec<f64>,
    /// Post-burn-in acceptance counts per family.
    pub acceptance: Vec<(Family, AcceptanceCount)>,
}

impl McmcSamples {
    pub fn empty(
        variant: ModelVariant,
        n_areas: usize,
        n_times: usize,
        edges: Vec<(usize, usize)>,
        n_covariates: usize,
        seed: u64,
    ) -> Self {
        McmcSamples {
            variant,
            n_areas,
            n_times,
            n_edges: edges.len(),
            n_covariates,
            seed,
            edges,
            beta: Vec::new(),
            tau2: Vec::new(),
            alpha: Vec::new(),
            zeta2: Vec::new(),
            rho: Vec::new(),
            w: Vec::new(),
            phi: Vec::new(),
            deviance: Vec::new(),
            acceptance: Vec::new(),
        }
    }

    pub fn n_draws(&self) -> usize {
        self.tau2.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_areas * self.n_times
    }

    pub(crate) fn push(&mut self, s: &ParameterState, deviance: f64) {
        self.beta.extend_from_slice(&s.beta);
        self.tau2.push(s.tau2);
        self.alpha.push(s.alpha);
        self.zeta2.push(s.zeta2);
        self.rho.push(s.rho);
        self.w.extend_from_slice(s.w_plus());
        self.phi.extend_from_slice(s.phi.as_slice());
        self.deviance.push(deviance);
    }

    pub fn beta_draw(&self, d: usize) -> &[f64] {
        &self.beta[d * self.n_covariates..(d + 1) * self.n_covariates]
    }

    pub fn w_draw(&self, d: usize) -> &[f64] {
        &self.w[d * self.n_edges..(d + 1) * self.n_edges]
    }

    pub fn phi_draw(&self, d: usize) -> &[f64] {
        let c = self.n_cells();
        &self.phi[d * c..(d + 1) * c]
    }

    pub fn phi_field(&self, d: usize) -> SpaceTimeField {
        SpaceTimeField::from_vec(self.n_areas, self.n_times, self.phi_draw(d).to_vec())
            .expect("stored draw shape")
    }

    /// All draws of one border weight.
    pub fn w_trace(&self, edge: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_draws()).map(move |d| self.w[d * self.n_edges + edge])
    }

    pub fn acceptance_rate(&self, f: Family) -> Option<f64> {
        self.acceptance
            .iter()
            .find(|(g, _)| *g == f)
            .map(|(_, c)| c.rate())
    }

    /// Checks the storage lengths against the declared dimensions.
    pub fn check_shape(&self) -> Result<()> {
        let n = self.n_draws();
        let ok = self.beta.len() == n * self.n_covariates
            && self.alpha.len() == n
            && self.zeta2.len() == n
            && self.rho.len() == n
            && self.w.len() == n * self.n_edges
            && self.phi.len() == n * self.n_cells()
            && self.deviance.len() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(
                "sample arrays disagree with the declared draw count".into(),
            ))
        }
    }

    /// Checks every stored value against its parameter support.
    pub fn check_support(&self) -> Result<()> {
        let bad = |name: &'static str, v: f64| {
            Err(Error::domain(
                name,
                format!("stored draw {v} outside support"),
            ))
        };
        for &t in self.tau2.iter() {
            if !(t > 0.0 && t.is_finite()) {
                return bad("tau2", t);
            }
        }
        for &z in self.zeta2.iter() {
            if !(z > 0.0 && z.is_finite()) {
                return bad("zeta2", z);
            }
        }
        for &a in self.alpha.iter().chain(&self.rho) {
            if !(0.0..=1.0).contains(&a) {
                return bad("alpha/rho", a);
            }
        }
        let adaptive = self.variant.is_adaptive();
        for &w in &self.w {
            let ok = if adaptive {
                w > 0.0 && w < 1.0
            } else {
                w == 1.0
            };
            if !ok {
                return bad("w", w);
            }
        }
        Ok(())
    }
}
