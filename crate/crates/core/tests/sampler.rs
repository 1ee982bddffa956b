mod common;

use common::*;
use stcar::model::{logit_inv, Dataset, ModelSpec, ModelVariant};
use stcar::sampler::{mix_seed, run_chain, run_chains, ChainConfig, Family};
use stcar::AreaGraph;

const VARIANTS: [ModelVariant; 3] =
    [ModelVariant::GlobalAR, ModelVariant::AdaptiveIndependent, ModelVariant::AdaptiveClustered];

fn short() -> ChainConfig {
    ChainConfig::new(600, 200, 2, 21)
}

#[test]
fn draws_stay_in_their_supports() {
    let d = lattice_dataset(&mut rng(8), 3, 3, 3);
    for v in VARIANTS {
        let spec = ModelSpec::new(v);
        let s = run_chain(&d, &spec, &short()).unwrap();
        assert_eq!(s.n_draws(), short().n_retained());
        s.check_shape().unwrap();
        s.check_support().unwrap();
        assert!(s.tau2.iter().all(|&t| t > 0.0));
        assert!(s.alpha.iter().all(|&a| (0.0..1.0).contains(&a)));
        assert!(s.rho.iter().all(|&r| (0.0..=1.0).contains(&r)));
        let (lo, hi) = (logit_inv(-spec.v_bound), logit_inv(spec.v_bound));
        if v.is_adaptive() {
            assert!(s.w.iter().all(|&w| w >= lo && w <= hi));
            assert!(s.zeta2.iter().all(|&z| z > 0.0));
        } else {
            assert!(s.w.iter().all(|&w| w == 1.0));
        }
        if v == ModelVariant::AdaptiveIndependent {
            assert!(s.rho.iter().all(|&r| r == 0.0));
        }
        for (f, c) in &s.acceptance {
            assert!(c.accepted <= c.proposed, "{f:?}");
        }
    }
}

#[test]
fn fixed_seed_reproduces_the_chain() {
    let d = lattice_dataset(&mut rng(9), 3, 3, 2);
    let spec = ModelSpec::new(ModelVariant::AdaptiveClustered);
    let a = run_chain(&d, &spec, &short()).unwrap();
    let b = run_chain(&d, &spec, &short()).unwrap();
    assert_eq!(a, b);
    let mut other = short();
    other.seed = 22;
    assert_ne!(a.phi, run_chain(&d, &spec, &other).unwrap().phi);
}

#[test]
fn parallel_chains_use_derived_seeds() {
    let d = lattice_dataset(&mut rng(10), 3, 3, 2);
    let spec = ModelSpec::new(ModelVariant::AdaptiveIndependent);
    let chains = run_chains(&d, &spec, &short(), 3).unwrap();
    assert_eq!(chains[0], run_chain(&d, &spec, &short()).unwrap());
    let mut c2 = short();
    c2.seed = mix_seed(c2.seed, 2);
    assert_eq!(chains[2], run_chain(&d, &spec, &c2).unwrap());
    assert_ne!(chains[1].phi, chains[2].phi);
}

#[test]
fn recovers_a_flat_risk_level() {
    let g = AreaGraph::lattice(4, 4).unwrap();
    let t = 4;
    let cells = 16 * t;
    let mut r = rng(11);
    let expected = vec![50.0; cells];
    let observed: Vec<u64> = (0..cells)
        .map(|_| {
            use rand_distr::{Distribution, Poisson};
            Poisson::new(50.0 * 1.3).unwrap().sample(&mut r) as u64
        })
        .collect();
    let d = Dataset::new(g, t, observed, expected, vec![1.0; cells], 1).unwrap();
    let s = run_chain(&d, &ModelSpec::new(ModelVariant::GlobalAR), &ChainConfig::new(3000, 1000, 2, 3)).unwrap();
    let risk: Vec<f64> = stcar::diagnostics::risk_draws(&s, &d).unwrap();
    let mean = risk.iter().sum::<f64>() / risk.len() as f64;
    assert!((mean - 1.3).abs() < 0.05, "mean risk {mean}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let d = lattice_dataset(&mut rng(12), 2, 2, 2);
    let spec = ModelSpec::new(ModelVariant::GlobalAR);
    assert!(run_chain(&d, &spec, &ChainConfig::new(100, 100, 1, 1)).is_err());
    assert!(run_chain(&d, &spec, &ChainConfig::new(100, 10, 0, 1)).is_err());
    let mut bad = ModelSpec::new(ModelVariant::AdaptiveIndependent);
    bad.prior_var_beta = -1.0;
    assert!(run_chain(&d, &bad, &short()).is_err());
    assert!(Family::Beta.name() != Family::Phi.name());
}
