use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::McmcSamples;

/// Per-border posterior summaries of the adaptive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub edges: Vec<(usize, usize)>,
    /// Posterior mean of `w_ik`.
    pub mean_w: Vec<f64>,
    /// `P(w_ik < 0.5 | Y)`, the fraction of draws strictly below one half.
    pub p_step: Vec<f64>,
}

impl BoundaryReport {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of borders flagged at `threshold`.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.p_step.iter().filter(|&&p| p > threshold).count()
    }
}

/// Step-change probabilities from stored weight draws.
pub fn step_change_probs(samples: &McmcSamples) -> Result<BoundaryReport> {
    if !samples.variant.is_adaptive() {
        return Err(Error::NoBoundaries);
    }
    let n = samples.n_draws();
    if n == 0 {
        return Err(Error::domain("samples", "no retained draws"));
    }
    let mut sum = vec![0.0; samples.n_edges];
    let mut below = vec![0usize; samples.n_edges];
    for d in 0..n {
        for (e, &w) in samples.w_draw(d).iter().enumerate() {
            sum[e] += w;
            below[e] += (w < 0.5) as usize;
        }
    }
    Ok(BoundaryReport {
        edges: samples.edges.clone(),
        mean_w: sum.into_iter().map(|s| s / n as f64).collect(),
        p_step: below.into_iter().map(|b| b as f64 / n as f64).collect(),
    })
}

/// Indices of borders with `p_ik > threshold`.
pub fn classify_boundaries(r: &BoundaryReport, threshold: f64) -> Result<Vec<usize>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::domain("threshold", format!("{threshold} outside (0, 1)")));
    }
    Ok((0..r.len()).filter(|&e| r.p_step[e] > threshold).collect())
}
