use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::graph::AreaGraph;
use crate::model::Dataset;

/// Moran's I with binary adjacency and a one-sided permutation p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoransI {
    pub statistic: f64,
    /// `(1 + #{I_perm ≥ I}) / (n_perm + 1)`; `NaN` when `n_perm = 0`.
    pub p_value: f64,
}

fn moran_statistic(values: &[f64], g: &AreaGraph, total_weight: f64) -> f64 {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = z.iter().map(|x| x * x).sum();
    let mut num = 0.0;
    for i in 0..n {
        for &k in g.neighbors(i) {
            num += z[i] * z[k];
        }
    }
    n as f64 / total_weight * num / denom
}

pub fn morans_i(values: &[f64], g: &AreaGraph, n_perm: usize, seed: u64) -> Result<MoransI> {
    if values.len() != g.n_areas() {
        return Err(Error::Dimension(format!("{} values for {} areas", values.len(), g.n_areas())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("values", "non-finite entry"));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::domain("values", "constant input has no spatial autocorrelation"));
    }
    let total_weight: f64 = g.degrees().iter().sum::<usize>() as f64;
    let statistic = moran_statistic(values, g, total_weight);
    if n_perm == 0 {
        return Ok(MoransI { statistic, p_value: f64::NAN });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm = values.to_vec();
    let mut extreme = 0usize;
    for _ in 0..n_perm {
        perm.shuffle(&mut rng);
        if moran_statistic(&perm, g, total_weight) >= statistic {
            extreme += 1;
        }
    }
    Ok(MoransI { statistic, p_value: (1 + extreme) as f64 / (n_perm + 1) as f64 })
}

/// Standardised incidence ratios `Y/E` and their across-time mean per area.
#[derive(Debug, Clone, PartialEq)]
pub struct Sir {
    pub ratios: SpaceTimeField,
    pub area_means: Vec<f64>,
}

pub fn sir(d: &Dataset) -> Sir {
    let values: Vec<f64> = d.observed().iter().zip(d.expected()).map(|(&y, &e)| y as f64 / e).collect();
    let ratios = SpaceTimeField::from_vec(d.n_areas(), d.n_times(), values).expect("dataset shape");
    let t = d.n_times() as f64;
    let area_means = (0..d.n_areas()).map(|i| (0..d.n_times()).map(|j| ratios.get(i, j)).sum::<f64>() / t).collect();
    Sir { ratios, area_means }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkerboard_is_minus_one() {
        let g = AreaGraph::lattice(2, 2).unwrap();
        let m = morans_i(&[1.0, -1.0, -1.0, 1.0], &g, 0, 0).unwrap();
        assert!((m.statistic + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_is_positive_and_significant() {
        let pairs: Vec<_> = (0..19).map(|i| (i, i + 1)).collect();
        let g = AreaGraph::from_pairs(20, &pairs).unwrap();
        let v: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let m = morans_i(&v, &g, 999, 7).unwrap();
        assert!(m.statistic > 0.8);
        assert!(m.p_value < 0.01);
        assert_eq!(m, morans_i(&v, &g, 999, 7).unwrap());
    }

    #[test]
    fn constant_input_rejected() {
        let g = AreaGraph::lattice(2, 2).unwrap();
        assert!(morans_i(&[3.0; 4], &g, 10, 0).is_err());
    }
}
