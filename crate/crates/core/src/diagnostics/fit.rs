use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::model::{cell_log_likelihood, Dataset, ModelVariant};
use crate::sampler::{Family, McmcSamples};

/// Empirical quantile with linear interpolation between order statistics
/// (`h = (n − 1)p`). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

/// Running mean `m += (x − m)/k`; returns `x` exactly for a constant input.
pub fn stable_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut m = 0.0;
    for (k, x) in values.into_iter().enumerate() {
        m += (x - m) / (k + 1) as f64;
    }
    m
}

/// Median and equal-tailed 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Summary {
            median: quantile_sorted(&v, 0.5),
            lower: quantile_sorted(&v, 0.025),
            upper: quantile_sorted(&v, 0.975),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// `exp(x_cᵀβ + φ_c)` for every draw and cell, draw-major.
pub fn risk_draws(samples: &McmcSamples, d: &Dataset) -> Result<Vec<f64>> {
    check_dims(samples, d)?;
    let cells = d.n_cells();
    let mut out = Vec::with_capacity(samples.n_draws() * cells);
    for k in 0..samples.n_draws() {
        let offsets = d.linear_offsets(samples.beta_draw(k));
        out.extend(samples.phi_draw(k).iter().zip(&offsets).map(|(p, o)| (p + o).exp()));
    }
    Ok(out)
}

fn check_dims(samples: &McmcSamples, d: &Dataset) -> Result<()> {
    if samples.n_areas != d.n_areas() || samples.n_times != d.n_times() || samples.n_covariates != d.n_covariates() {
        return Err(Error::Dimension("samples were not drawn for this dataset".into()));
    }
    samples.check_shape()
}

/// Per-cell posterior median and 95% interval of the risk.
pub fn risk_summaries(samples: &McmcSamples, d: &Dataset) -> Result<Vec<Summary>> {
    let draws = risk_draws(samples, d)?;
    let cells = d.n_cells();
    let n = samples.n_draws();
    if n == 0 {
        return Err(Error::domain("samples", "no retained draws"));
    }
    Ok((0..cells)
        .map(|c| {
            let column: Vec<f64> = (0..n).map(|k| draws[k * cells + c]).collect();
            Summary::of(&column)
        })
        .collect())
}

/// Fitted risk surface (posterior medians).
pub fn fitted_risk(samples: &McmcSamples, d: &Dataset) -> Result<SpaceTimeField> {
    let s = risk_summaries(samples, d)?;
    SpaceTimeField::from_vec(d.n_areas(), d.n_times(), s.into_iter().map(|x| x.median).collect())
}

/// `√(Σ (R − R̂)² / NT)`.
pub fn rmse(fitted: &SpaceTimeField, truth: &SpaceTimeField) -> Result<f64> {
    if fitted.n_areas() != truth.n_areas() || fitted.n_times() != truth.n_times() {
        return Err(Error::Dimension("fitted and true surfaces differ in shape".into()));
    }
    let sse: f64 = fitted.as_slice().iter().zip(truth.as_slice()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((sse / fitted.len() as f64).sqrt())
}

/// Fraction of cells whose 95% interval contains the truth.
pub fn coverage95(summaries: &[Summary], truth: &SpaceTimeField) -> Result<f64> {
    if summaries.len() != truth.len() {
        return Err(Error::Dimension("one summary per cell required".into()));
    }
    let hits = summaries.iter().zip(truth.as_slice()).filter(|(s, &t)| s.contains(t)).count();
    Ok(hits as f64 / summaries.len() as f64)
}

/// Deviance-based fit criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dic {
    pub dic: f64,
    pub pd: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
}

/// `pD = D̄ − D̂`, `DIC = D̄ + pD`.
pub fn dic_from_parts(deviances: &[f64], deviance_at_mean: f64) -> Dic {
    let mean_deviance = stable_mean(deviances.iter().copied());
    let pd = mean_deviance - deviance_at_mean;
    Dic { dic: mean_deviance + pd, pd, mean_deviance, deviance_at_mean }
}

/// Poisson deviance `−2 Σ log p(Y | η)` for linear predictors `eta`.
pub fn poisson_deviance(d: &Dataset, eta: &[f64]) -> f64 {
    let ll: f64 = eta
        .iter()
        .enumerate()
        .map(|(c, &e)| cell_log_likelihood(d.observed()[c], d.expected()[c], e, d.log_factorial(c)))
        .sum();
    -2.0 * ll
}

/// DIC and pD with the plug-in deviance at the posterior mean of the linear
/// predictor.
pub fn dic_pd(samples: &McmcSamples, d: &Dataset) -> Result<Dic> {
    check_dims(samples, d)?;
    let n = samples.n_draws();
    if n < 10 {
        return Err(Error::domain("samples", format!("{n} retained draws, DIC needs at least 10")));
    }
    let cells = d.n_cells();
    let mut mean_eta = vec![0.0; cells];
    for k in 0..n {
        let offsets = d.linear_offsets(samples.beta_draw(k));
        for (c, m) in mean_eta.iter_mut().enumerate() {
            let eta = offsets[c] + samples.phi_draw(k)[c];
            *m += (eta - *m) / (k + 1) as f64;
        }
    }
    Ok(dic_from_parts(&samples.deviance, poisson_deviance(d, &mean_eta)))
}

/// Posterior summaries of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub n_draws: usize,
    pub dic: Dic,
    pub beta: Vec<(String, Summary)>,
    pub tau2: Summary,
    pub alpha: Summary,
    pub zeta2: Option<Summary>,
    pub rho: Option<Summary>,
    pub acceptance: Vec<(String, f64)>,
    pub risk: Vec<Summary>,
}

impl FitReport {
    pub fn new(samples: &McmcSamples, d: &Dataset) -> Result<Self> {
        let n = samples.n_draws();
        let p = samples.n_covariates;
        let beta = (0..p)
            .map(|r| {
                let draws: Vec<f64> = (0..n).map(|k| samples.beta_draw(k)[r]).collect();
                (d.covariate_names()[r].clone(), Summary::of(&draws))
            })
            .collect();
        let adaptive = samples.variant.is_adaptive();
        let rho_sampled = samples.acceptance.iter().any(|(f, _)| *f == Family::Rho);
        Ok(FitReport {
            model: samples.variant.name().to_string(),
            n_draws: n,
            dic: dic_pd(samples, d)?,
            beta,
            tau2: Summary::of(&samples.tau2),
            alpha: Summary::of(&samples.alpha),
            zeta2: adaptive.then(|| Summary::of(&samples.zeta2)),
            rho: (rho_sampled || samples.variant == ModelVariant::AdaptiveClustered)
                .then(|| Summary::of(&samples.rho)),
            acceptance: samples.acceptance.iter().map(|(f, c)| (f.name().to_string(), c.rate())).collect(),
            risk: risk_summaries(samples, d)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
        assert_eq!(stable_mean([0.1; 7]), 0.1);
    }

    #[test]
    fn rmse_examples() {
        let a = SpaceTimeField::from_vec(2, 2, vec![1.0, 1.2, 0.8, 1.0]).unwrap();
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let b = a.map(|x| x + 0.1);
        assert!((rmse(&b, &a).unwrap() - 0.1).abs() < 1e-12);
        assert!(rmse(&a, &SpaceTimeField::zeros(4, 1)).is_err());
    }

    #[test]
    fn dic_affine_identity() {
        let dev = [10.0, 12.0, 11.0, 9.5];
        let a = dic_from_parts(&dev, 10.0);
        let shifted: Vec<f64> = dev.iter().map(|x| x + 7.0).collect();
        let b = dic_from_parts(&shifted, 17.0);
        assert!((b.dic - a.dic - 7.0).abs() < 1e-12);
        assert!((b.pd - a.pd).abs() < 1e-12);
        let c = dic_from_parts(&[4.2; 12], 4.2);
        assert_eq!(c.pd, 0.0);
        assert_eq!(c.dic, 4.2);
    }

    #[test]
    fn coverage_extremes() {
        let truth = SpaceTimeField::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        let inside = vec![Summary { median: 1.0, lower: 0.5, upper: 1.5 }, Summary { median: 2.0, lower: 1.9, upper: 2.1 }];
        assert_eq!(coverage95(&inside, &truth).unwrap(), 1.0);
        let outside = vec![Summary { median: 9.0, lower: 8.0, upper: 10.0 }; 2];
        assert_eq!(coverage95(&outside, &truth).unwrap(), 0.0);
    }
}
