#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use statrs::function::gamma::ln_gamma;

use stcar::model::{Dataset, ModelSpec, ModelVariant, ParameterState};
use stcar::sampler::Chain;
use stcar::{AreaGraph, EdgeSet, SpaceTimeField};

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

/// Random Erdős–Rényi style graph on `n` nodes with a spanning path so no
/// area is isolated.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, p: f64) -> AreaGraph {
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    for i in 0..n {
        for k in i + 2..n {
            if r.random::<f64>() < p {
                pairs.push((i, k));
            }
        }
    }
    AreaGraph::from_pairs(n, &pairs).unwrap()
}

/// Dense `diag(W1) − W + εI` built straight from the edge list.
pub fn dense_adaptive(n: usize, edges: &[(usize, usize)], w: &[f64], eps: f64) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::identity(n, n) * eps;
    for (e, &(i, k)) in edges.iter().enumerate() {
        q[(i, i)] += w[e];
        q[(k, k)] += w[e];
        q[(i, k)] -= w[e];
        q[(k, i)] -= w[e];
    }
    q
}

/// Dense `ρ[diag(W1) − W] + (1 − ρ + ε)I`.
pub fn dense_leroux(n: usize, edges: &[(usize, usize)], rho: f64, eps: f64) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::identity(n, n) * (1.0 - rho + eps);
    for &(i, k) in edges {
        q[(i, i)] += rho;
        q[(k, k)] += rho;
        q[(i, k)] -= rho;
        q[(k, i)] -= rho;
    }
    q
}

pub fn dense_ar1(alpha: f64, t: usize) -> DMatrix<f64> {
    let mut z = DMatrix::<f64>::zeros(t, t);
    for j in 0..t {
        z[(j, j)] = if j + 1 < t { 1.0 + alpha * alpha } else { 1.0 };
        if j + 1 < t {
            z[(j, j + 1)] = -alpha;
            z[(j + 1, j)] = -alpha;
        }
    }
    z
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

pub fn dense_log_det(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues.iter().map(|l| l.ln()).sum()
}

/// Zero-mean Gaussian log-density with precision `k / scale2`.
pub fn gaussian_log_density(x: &DVector<f64>, k: &DMatrix<f64>, scale2: f64) -> f64 {
    let n = x.len() as f64;
    let quad = (x.transpose() * k * x)[(0, 0)];
    -0.5 * n * (LN_2PI + scale2.ln()) + 0.5 * dense_log_det(k) - quad / (2.0 * scale2)
}

pub fn ig_log_density(x: f64, a: f64, b: f64) -> f64 {
    a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - b / x
}

/// Border pairs sharing an endpoint, enumerated by brute force.
pub fn brute_edge_pairs(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..edges.len() {
        for b in a + 1..edges.len() {
            let (i, k) = edges[a];
            let (r, s) = edges[b];
            if i == r || i == s || k == r || k == s {
                out.push((a, b));
            }
        }
    }
    out
}

/// Full log posterior of a chain's state from dense matrices only.
pub fn dense_log_joint(chain: &Chain) -> f64 {
    let d = chain.data();
    let spec = chain.spec();
    let s = chain.state();
    let n = d.n_areas();
    let t = d.n_times();
    let es = EdgeSet::from_graph(d.graph());
    let edges = es.edges().to_vec();
    let mut lp = 0.0;
    for c in 0..n * t {
        let eta: f64 = d.covariates(c).iter().zip(&s.beta).map(|(x, b)| x * b).sum::<f64>() + s.phi.as_slice()[c];
        let mu = d.expected()[c] * eta.exp();
        let y = d.observed()[c] as f64;
        lp += y * mu.ln() - mu - ln_gamma(y + 1.0);
    }
    for b in &s.beta {
        lp += -0.5 * (LN_2PI + spec.prior_var_beta.ln()) - b * b / (2.0 * spec.prior_var_beta);
    }
    let q = match spec.variant {
        ModelVariant::GlobalAR => dense_leroux(n, &edges, s.rho, spec.epsilon),
        _ => dense_adaptive(n, &edges, s.w_plus(), spec.epsilon),
    };
    let k = kron(&dense_ar1(s.alpha, t), &q);
    let phi = DVector::from_column_slice(s.phi.as_slice());
    lp += gaussian_log_density(&phi, &k, s.tau2);
    lp += ig_log_density(s.tau2, spec.prior_tau2.shape, spec.prior_tau2.scale);
    if spec.variant.is_adaptive() {
        let m = edges.len();
        let pairs = brute_edge_pairs(&edges);
        let qe = dense_leroux(m, &pairs, s.rho, 0.0);
        let centred = DVector::from_iterator(m, s.v_plus().iter().map(|v| v - s.mu));
        let quad = (centred.transpose() * &qe * &centred)[(0, 0)];
        let ridged = dense_leroux(m, &pairs, s.rho, spec.epsilon);
        lp += -quad / (2.0 * s.zeta2) + 0.5 * dense_log_det(&ridged) - 0.5 * m as f64 * (LN_2PI + s.zeta2.ln());
        lp += ig_log_density(s.zeta2, spec.prior_zeta2.shape, spec.prior_zeta2.scale);
    }
    lp
}

/// Dataset on a lattice with an intercept and one standard-normal covariate.
pub fn lattice_dataset(r: &mut ChaCha8Rng, nrow: usize, ncol: usize, t: usize) -> Dataset {
    let g = AreaGraph::lattice(nrow, ncol).unwrap();
    let cells = nrow * ncol * t;
    let expected: Vec<f64> = (0..cells).map(|_| 2.0 + 8.0 * r.random::<f64>()).collect();
    let mut design = Vec::with_capacity(2 * cells);
    for _ in 0..cells {
        design.push(1.0);
        design.push(normal(r));
    }
    let observed: Vec<u64> = expected.iter().map(|&e| Poisson::new(e).unwrap().sample(r) as u64).collect();
    Dataset::new(g, t, observed, expected, design, 2).unwrap()
}

/// A random interior parameter state.
pub fn random_state(r: &mut ChaCha8Rng, d: &Dataset, spec: &ModelSpec) -> ParameterState {
    let n_edges = EdgeSet::from_graph(d.graph()).len();
    let beta = (0..d.n_covariates()).map(|_| 0.3 * normal(r)).collect();
    let phi_vals = (0..d.n_cells()).map(|_| 0.5 * normal(r)).collect();
    let phi = SpaceTimeField::from_vec(d.n_areas(), d.n_times(), phi_vals).unwrap();
    let v = (0..n_edges).map(|_| 6.0 * normal(r)).map(|v: f64| v.clamp(-14.0, 14.0)).collect();
    let rho = match spec.variant {
        ModelVariant::AdaptiveIndependent => 0.0,
        _ => r.random::<f64>(),
    };
    ParameterState::new(
        beta,
        phi,
        0.2 + r.random::<f64>(),
        0.95 * r.random::<f64>(),
        v,
        0.5 + 3.0 * r.random::<f64>(),
        rho,
        spec.mu,
    )
}

/// `log|L + εI|` for a connected weighted Laplacian `L`, from the exact
/// eigenvalue `ε` (constant eigenvector) plus the eigenvalues of `L`
/// restricted to the complement of the constant vector.
pub fn deflated_laplacian_log_det(lap: &DMatrix<f64>, eps: f64) -> f64 {
    let n = lap.nrows();
    let mut u = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    u[0] -= 1.0;
    let norm = u.norm();
    let h = if norm > 0.0 {
        u /= norm;
        DMatrix::<f64>::identity(n, n) - 2.0 * &u * u.transpose()
    } else {
        DMatrix::<f64>::identity(n, n)
    };
    let reduced = (h.transpose() * lap * &h).view((1, 1), (n - 1, n - 1)).into_owned();
    let eig = reduced.symmetric_eigen().eigenvalues;
    eps.ln() + eig.iter().map(|l| (l + eps).ln()).sum::<f64>()
}
