use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random-walk proposal standard deviations, one per Metropolis family.
///
/// A zero scale switches the family off: its parameters stay at their
/// starting values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalScales {
    /// Multiplier on the Fisher-information shaped joint proposal for `β`.
    pub beta: f64,
    pub phi: f64,
    pub alpha: f64,
    pub v: f64,
    pub rho: f64,
}

impl Default for ProposalScales {
    fn default() -> Self {
        ProposalScales {
            beta: 0.5,
            phi: 0.1,
            alpha: 0.1,
            v: 1.0,
            rho: 0.1,
        }
    }
}

impl ProposalScales {
    pub fn get(&self, f: Family) -> f64 {
        match f {
            Family::Beta => self.beta,
            Family::Phi => self.phi,
            Family::Alpha => self.alpha,
            Family::V => self.v,
            Family::Rho => self.rho,
        }
    }

    pub fn get_mut(&mut self, f: Family) -> &mut f64 {
        match f {
            Family::Beta => &mut self.beta,
            Family::Phi => &mut self.phi,
            Family::Alpha => &mut self.alpha,
            Family::V => &mut self.v,
            Family::Rho => &mut self.rho,
        }
    }
}

/// Metropolis update families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Beta,
    Phi,
    Alpha,
    V,
    Rho,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Beta,
        Family::Phi,
        Family::Alpha,
        Family::V,
        Family::Rho,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Beta => "beta",
            Family::Phi => "phi",
            Family::Alpha => "alpha",
            Family::V => "v",
            Family::Rho => "rho",
        }
    }

    /// Joint multi-dimensional proposals (tuned to the block target rate).
    pub fn is_block(self) -> bool {
        matches!(self, Family::Beta | Family::V)
    }
}

/// Run length, thinning, proposal tuning and seeding of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total iterations including burn-in.
    pub n_sample: usize,
    pub burnin: usize,
    pub thin: usize,
    pub v_block_size: usize,
    pub scales: ProposalScales,
    /// Iterations per adaptation (and stuck-detection) window.
    pub adapt_interval: usize,
    pub target_scalar: f64,
    pub target_block: f64,
    /// Abort when a family accepts every or no proposal over a post-burn-in window.
    pub abort_on_stuck: bool,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_sample: 6000,
            burnin: 2000,
            thin: 4,
            v_block_size: 10,
            scales: ProposalScales::default(),
            adapt_interval: 100,
            target_scalar: 0.44,
            target_block: 0.25,
            abort_on_stuck: true,
            seed: 1,
        }
    }
}

impl ChainConfig {
    pub fn new(n_sample: usize, burnin: usize, thin: usize, seed: u64) -> Self {
        ChainConfig {
            n_sample,
            burnin,
            thin,
            seed,
            ..Default::default()
        }
    }

    /// `floor((n_sample − burnin) / thin)`.
    pub fn n_retained(&self) -> usize {
        self.n_sample.saturating_sub(self.burnin) / self.thin.max(1)
    }

    pub fn target(&self, f: Family) -> f64 {
        if f.is_block() {
            self.target_block
        } else {
            self.target_scalar
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::domain("thin", "must be at least 1"));
        }
        if self.burnin >= self.n_sample {
            return Err(Error::domain(
                "burnin",
                format!("{} must be below n_sample {}", self.burnin, self.n_sample),
            ));
        }
        if self.n_retained() < 10 {
            return Err(Error::domain(
                "n_sample",
                format!(
                    "(n_sample - burnin) / thin = {} retained draws, need at least 10",
                    self.n_retained()
                ),
            ));
        }
        if self.v_block_size == 0 {
            return Err(Error::domain("v_block_size", "must be at least 1"));
        }
        if self.adapt_interval == 0 {
            return Err(Error::domain("adapt_interval", "must be at least 1"));
        }
        for t in [self.target_scalar, self.target_block] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::domain(
                    "target acceptance",
                    format!("{t} outside (0, 1)"),
                ));
            }
        }
        for f in Family::ALL {
            let s = self.scales.get(f);
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::domain(
                    "proposal scale",
                    format!("{} scale {s} must be finite and non-negative", f.name()),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retained_count() {
        assert_eq!(ChainConfig::new(100, 50, 5, 0).n_retained(), 10);
        assert_eq!(ChainConfig::new(6000, 2000, 4, 0).n_retained(), 1000);
        assert!(ChainConfig::new(100, 50, 6, 0).validate().is_err());
        assert!(ChainConfig::new(100, 100, 1, 0).validate().is_err());
        assert!(ChainConfig::new(100, 50, 0, 0).validate().is_err());
        assert!(ChainConfig::new(100, 50, 5, 0).validate().is_ok());
    }
}
