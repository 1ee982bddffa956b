//! Metropolis-within-Gibbs sampling of the model parameters.

pub mod chain;
pub mod config;
pub mod samples;

pub use chain::{reflect_unit, Chain, Observation, VBlockProposal};
pub use config::{ChainConfig, Family, ProposalScales};
pub use samples::{AcceptanceCount, McmcSamples};

use rayon::prelude::*;

use crate::error::Result;
use crate::model::{Dataset, ModelSpec};

/// SplitMix64 finalizer applied to `base ⊕ index·φ64`; derives independent
/// seeds for chains and replicates.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits one chain from data-driven starting values.
pub fn run_chain(d: &Dataset, spec: &ModelSpec, cfg: &ChainConfig) -> Result<McmcSamples> {
    Chain::new(d.clone(), spec.clone(), cfg.clone())?.run()
}

/// Fits `n_chains` independent chains in parallel. Chain `c` uses the seed
/// `mix_seed(cfg.seed, c)`, except chain 0 which keeps `cfg.seed`.
pub fn run_chains(
    d: &Dataset,
    spec: &ModelSpec,
    cfg: &ChainConfig,
    n_chains: usize,
) -> Result<Vec<McmcSamples>> {
    (0..n_chains)
        .into_par_iter()
        .map(|c| {
            let mut cfg = cfg.clone();
            if c > 0 {
                cfg.seed = mix_seed(cfg.seed, c as u64);
            }
            run_chain(d, spec, &cfg)
        })
        .collect()
}
