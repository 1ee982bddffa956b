//! Likelihood, priors and closed-form helper quantities.

use std::f64::consts::PI;

use super::data::Dataset;
use super::spec::InverseGamma;
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::graph::{AreaGraph, EdgeGraph};
use crate::precision::{factorize, PrecisionBuilder};

/// Largest admissible |x_ijᵀβ + φ_ij|.
pub const MAX_LINEAR_PREDICTOR: f64 = 700.0;

/// Poisson log-pmf of one cell with log-mean `log E + η`, log-factorial supplied.
#[inline]
pub fn cell_log_likelihood(y: u64, expected: f64, eta: f64, log_y_factorial: f64) -> f64 {
    let y = y as f64;
    y * (expected.ln() + eta) - expected * eta.exp() - log_y_factorial
}

/// `Σ_ij [Y log(E R) − E R − log Y!]` with `log R = xᵀβ + φ`.
///
/// With `include_constant = false` the `log Y!` terms are dropped.
pub fn log_likelihood_with(
    d: &Dataset,
    beta: &[f64],
    phi: &SpaceTimeField,
    include_constant: bool,
) -> Result<f64> {
    if beta.len() != d.n_covariates() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} covariates",
            beta.len(),
            d.n_covariates()
        )));
    }
    if phi.n_areas() != d.n_areas() || phi.n_times() != d.n_times() {
        return Err(Error::Dimension(
            "random-effect field does not match the data grid".into(),
        ));
    }
    let offsets = d.linear_offsets(beta);
    let mut total = 0.0;
    for c in 0..d.n_cells() {
        let eta = offsets[c] + phi.as_slice()[c];
        if !(eta.abs() <= MAX_LINEAR_PREDICTOR) {
            return Err(Error::PredictorOverflow {
                area: c % d.n_areas(),
                time: c / d.n_areas(),
                value: eta,
            });
        }
        let lf = if include_constant {
            d.log_factorial(c)
        } else {
            0.0
        };
        total += cell_log_likelihood(d.observed()[c], d.expected()[c], eta, lf);
    }
    Ok(total)
}

pub fn log_likelihood(d: &Dataset, beta: &[f64], phi: &SpaceTimeField) -> Result<f64> {
    log_likelihood_with(d, beta, phi, true)
}

/// Logistic map to `(0, 1)`.
#[inline]
pub fn logit_inv(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn logit(w: f64) -> Result<f64> {
    if w > 0.0 && w < 1.0 {
        Ok(w.ln() - (-w).ln_1p())
    } else {
        Err(Error::domain("w", format!("{w} outside (0, 1)")))
    }
}

/// The two sums in the border-weight prior exponent:
/// `Σ_{a∼b} (v_a − v_b)²` over unordered adjacent pairs and `Σ (v_a − μ)²`.
pub fn v_prior_sums(v: &[f64], mu: f64, eg: &EdgeGraph) -> Result<(f64, f64)> {
    if v.len() != eg.n_edges() {
        return Err(Error::Dimension(format!(
            "{} logits for {} borders",
            v.len(),
            eg.n_edges()
        )));
    }
    let mut pairs = 0.0;
    for (a, nb) in eg.adjacency_lists().iter().enumerate() {
        for &b in nb {
            if a < b {
                pairs += (v[a] - v[b]).powi(2);
            }
        }
    }
    let centred = v.iter().map(|x| (x - mu).powi(2)).sum();
    Ok((pairs, centred))
}

/// Unnormalized log prior of the border logits:
/// `−(1/2ζ²)[ρ Σ_{a∼b}(v_a − v_b)² + (1 − ρ) Σ(v_a − μ)²]`.
pub fn v_log_prior(v: &[f64], zeta2: f64, rho: f64, mu: f64, eg: &EdgeGraph) -> Result<f64> {
    check_zeta_rho(zeta2, rho)?;
    let (pairs, centred) = v_prior_sums(v, mu, eg)?;
    Ok(-(rho * pairs + (1.0 - rho) * centred) / (2.0 * zeta2))
}

/// `log|Q_edge(ρ) + εI|` for the Leroux precision over border adjacency.
pub fn edge_precision_log_det(eg: &EdgeGraph, rho: f64, eps: f64) -> Result<f64> {
    let q = PrecisionBuilder::from_neighbors(eg.adjacency_lists()).leroux(rho, eps)?;
    Ok(factorize(&q)?.log_det())
}

/// Normalized Gaussian log prior of the border logits, using the ridged
/// border precision for the determinant (truncation mass ignored).
pub fn v_log_prior_normalized(
    v: &[f64],
    zeta2: f64,
    rho: f64,
    mu: f64,
    eg: &EdgeGraph,
    eps: f64,
) -> Result<f64> {
    let exponent = v_log_prior(v, zeta2, rho, mu, eg)?;
    let m = v.len() as f64;
    Ok(exponent + 0.5 * edge_precision_log_det(eg, rho, eps)? - 0.5 * m * (2.0 * PI * zeta2).ln())
}

fn check_zeta_rho(zeta2: f64, rho: f64) -> Result<()> {
    if !(zeta2 > 0.0 && zeta2.is_finite()) {
        return Err(Error::domain("zeta2", format!("{zeta2} must be positive")));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("rho", format!("{rho} outside [0, 1]")));
    }
    Ok(())
}

/// Log-density of the border weight `w` induced by `logit(w) ~ N(μ, ζ²)`,
/// up to a constant.
pub fn w_prior_log_density(w: f64, mu: f64, zeta: f64) -> f64 {
    let v = (w / (1.0 - w)).ln();
    -(v - mu).powi(2) / (2.0 * zeta * zeta) - w.ln() - (1.0 - w).ln()
}

/// Induced prior density of `w` on `resolution` equally spaced interior
/// points `k / (resolution + 1)`, scaled so the largest value is 1.
pub fn w_prior_density_curve(mu: f64, zeta: f64, resolution: usize) -> Vec<(f64, f64)> {
    let grid: Vec<f64> = (1..=resolution)
        .map(|k| k as f64 / (resolution + 1) as f64)
        .collect();
    let logs: Vec<f64> = grid
        .iter()
        .map(|&w| w_prior_log_density(w, mu, zeta))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    grid.into_iter()
        .zip(logs)
        .map(|(w, l)| (w, (l - top).exp()))
        .collect()
}

/// Partial correlation of `φ_i` and `φ_k` under the Leroux prior with
/// binary adjacency.
pub fn partial_correlation(i: usize, k: usize, rho: f64, g: &AreaGraph) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("rho", format!("{rho} outside [0, 1]")));
    }
    let w = if g.is_adjacent(i, k) { 1.0 } else { 0.0 };
    let di = rho * g.degree(i) as f64 + (1.0 - rho);
    let dk = rho * g.degree(k) as f64 + (1.0 - rho);
    Ok(rho * w / (di * dk).sqrt())
}

/// Indirectly standardized expected counts `E_ij = Σ_r N_ijr p_r`.
///
/// `populations` holds `q` stratum counts per cell, cells in time-major order.
pub fn expected_counts(
    n_areas: usize,
    n_times: usize,
    populations: &[f64],
    rates: &[f64],
) -> Result<SpaceTimeField> {
    let q = rates.len();
    if populations.len() != n_areas * n_times * q {
        return Err(Error::Dimension(format!(
            "{} population entries for {n_areas}x{n_times}x{q}",
            populations.len()
        )));
    }
    if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::domain("rate", format!("{r} outside [0, 1]")));
    }
    if let Some(p) = populations.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::domain(
            "population",
            format!("{p} must be non-negative"),
        ));
    }
    let mut out = Vec::with_capacity(n_areas * n_times);
    for (c, strata) in populations
        .chunks(q.max(1))
        .enumerate()
        .take(n_areas * n_times)
    {
        let e: f64 = strata.iter().zip(rates).map(|(n, p)| n * p).sum();
        if e <= 0.0 {
            return Err(Error::ZeroExpected {
                area: c % n_areas,
                time: c / n_areas,
            });
        }
        out.push(e);
    }
    if out.len() != n_areas * n_times {
        return Err(Error::ZeroExpected { area: 0, time: 0 });
    }
    SpaceTimeField::from_vec(n_areas, n_times, out)
}

/// Log-density of an inverse-gamma `(shape, scale)` variable.
pub fn inverse_gamma_log_density(x: f64, prior: InverseGamma) -> f64 {
    let InverseGamma { shape, scale } = prior;
    shape * scale.ln()
        - statrs::function::gamma::ln_gamma(shape)
        - (shape + 1.0) * x.ln()
        - scale / x
}

/// `Σ_r log N(β_r; 0, var)`.
pub fn beta_log_prior(beta: &[f64], var: f64) -> f64 {
    beta.iter()
        .map(|b| -0.5 * (2.0 * PI * var).ln() - b * b / (2.0 * var))
        .sum()
}
