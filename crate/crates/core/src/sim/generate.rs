use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::scenario::{Scenario, DEFAULT_EPS_SIM};
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::graph::{AreaGraph, EdgeSet};
use crate::model::Dataset;
use crate::precision::{factorize, PrecisionBuilder};

/// True risk surface and step-change flags of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub risk: SpaceTimeField,
    pub edges: Vec<(usize, usize)>,
    pub boundaries: Vec<bool>,
}

impl Truth {
    pub fn n_boundaries(&self) -> usize {
        self.boundaries.iter().filter(|&&b| b).count()
    }
}

/// Draw from `N(0, τ² (Q(1, ε_sim))⁻¹)` with unit border weights, centred
/// to mean zero.
pub fn sample_smooth_field(g: &AreaGraph, tau2: f64, seed: u64) -> Result<Vec<f64>> {
    sample_smooth_field_with(g, tau2, DEFAULT_EPS_SIM, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_smooth_field_with<R: Rng + ?Sized>(
    g: &AreaGraph,
    tau2: f64,
    eps: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(tau2 >= 0.0 && tau2.is_finite()) {
        return Err(Error::domain("gmrf_tau2", format!("{tau2} must be non-negative")));
    }
    let builder = PrecisionBuilder::for_graph(g);
    let q = builder.adaptive(&vec![1.0; builder.n_edges()], eps)?;
    let factor = factorize(&q)?;
    let z: Vec<f64> = (0..g.n_areas()).map(|_| rng.sample(StandardNormal)).collect();
    let sd = tau2.sqrt();
    let mut x: Vec<f64> = factor.sample_from_noise(&z).into_iter().map(|v| v * sd).collect();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in &mut x {
        *v -= mean;
    }
    Ok(x)
}

/// `log R_ij = field_i + log(A)·1[i high] + noise_ij`.
pub fn make_true_risk(sc: &Scenario, seed: u64) -> Result<Truth> {
    make_true_risk_with(sc, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn make_true_risk_with<R: Rng + ?Sized>(sc: &Scenario, rng: &mut R) -> Result<Truth> {
    sc.validate()?;
    let n = sc.graph.n_areas();
    let field = sample_smooth_field_with(&sc.graph, sc.gmrf_tau2, sc.eps_sim, rng)?;
    let high = sc.in_high_region();
    let log_a = sc.a.ln();
    let mut risk = SpaceTimeField::zeros(n, sc.n_times);
    for t in 0..sc.n_times {
        for i in 0..n {
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * sc.noise_sd;
            let step = if high[i] { log_a } else { 0.0 };
            risk.set(i, t, (field[i] + step + noise).exp());
        }
    }
    Ok(Truth {
        risk,
        edges: EdgeSet::from_graph(&sc.graph).edges().to_vec(),
        boundaries: sc.true_boundaries(),
    })
}

/// Poisson counts with `E ≡ E_size` and an intercept-only design. The truth
/// equals `make_true_risk(sc, seed)`.
pub fn generate_dataset(sc: &Scenario, seed: u64) -> Result<(Dataset, Truth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = make_true_risk_with(sc, &mut rng)?;
    let cells = truth.risk.len();
    let mut observed = Vec::with_capacity(cells);
    for &r in truth.risk.as_slice() {
        let lambda = sc.e_size * r;
        let pois = Poisson::new(lambda).map_err(|e| Error::domain("E", format!("Poisson mean {lambda}: {e}")))?;
        observed.push(pois.sample(&mut rng) as u64);
    }
    let d = Dataset::new(sc.graph.clone(), sc.n_times, observed, vec![sc.e_size; cells], vec![1.0; cells], 1)?
        .with_covariate_names(vec!["intercept".into()])?;
    Ok((d, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::LatticeShape;

    #[test]
    fn flat_scenario_has_unit_risk() {
        let mut sc = Scenario::lattice(LatticeShape { nrow: 3, ncol: 3 }, 2, 1.0, 10.0).unwrap();
        sc.noise_sd = 0.0;
        sc.gmrf_tau2 = 0.0;
        let t = make_true_risk(&sc, 5).unwrap();
        assert!(t.risk.as_slice().iter().all(|&r| r == 1.0));
        assert_eq!(t.n_boundaries(), 0);
    }

    #[test]
    fn step_ratio_is_a() {
        let mut sc = Scenario::baseline();
        sc.noise_sd = 0.0;
        sc.gmrf_tau2 = 0.0;
        let t = make_true_risk(&sc, 5).unwrap();
        let hi = sc.high_region[0];
        assert!((t.risk.get(hi, 0) / t.risk.get(0, 0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn field_is_centred() {
        let g = AreaGraph::lattice(4, 4).unwrap();
        let x = sample_smooth_field(&g, 0.5, 3).unwrap();
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        assert!(sample_smooth_field(&g, 0.0, 3).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dataset_is_reproducible() {
        let sc = Scenario::baseline();
        let (a, ta) = generate_dataset(&sc, 9).unwrap();
        let (b, tb) = generate_dataset(&sc, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert_eq!(ta, make_true_risk(&sc, 9).unwrap());
        assert!(a.expected().iter().all(|&e| e == 75.0));
        assert_eq!(a.n_times(), 5);
    }
}
