use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::config::{ChainConfig, Family};
use super::samples::{AcceptanceCount, McmcSamples};
use crate::error::{Error, Result};
use crate::graph::{EdgeGraph, EdgeSet};
use crate::model::{
    beta_log_prior, inverse_gamma_log_density, logit_inv, v_log_prior_normalized, v_prior_sums,
    Dataset, InverseGamma, ModelSpec, ModelVariant, ParameterState, MAX_LINEAR_PREDICTOR,
};
use crate::precision::{
    factorize, phi_log_density, CholeskyFactor, PeriodForms, PrecisionBuilder, SparseSymMatrix,
    TemporalPrecision,
};

/// Observation model used by the `β` and `φ` updates.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// `Y ~ Poisson(E exp(η))`.
    Poisson,
    /// `y ~ N(η, sd²)` per cell; a conjugate test hook.
    Gaussian { values: Vec<f64>, sd: f64 },
}

/// A candidate update of one block of border logits.
#[derive(Debug, Clone)]
pub struct VBlockProposal {
    pub edges: Vec<usize>,
    pub v_new: Vec<f64>,
    pub log_ratio: f64,
    q: SparseSymMatrix,
    factor: CholeskyFactor,
}

/// A Metropolis-within-Gibbs chain with its cached precision, factor and
/// linear-predictor offsets.
#[derive(Debug, Clone)]
pub struct Chain {
    data: Dataset,
    spec: ModelSpec,
    cfg: ChainConfig,
    edges: EdgeSet,
    edge_graph: EdgeGraph,
    builder: PrecisionBuilder,
    edge_builder: PrecisionBuilder,
    state: ParameterState,
    z: TemporalPrecision,
    q: SparseSymMatrix,
    factor: CholeskyFactor,
    edge_factor: Option<CholeskyFactor>,
    offsets: Vec<f64>,
    beta_shape: DMatrix<f64>,
    observation: Observation,
    window: [AcceptanceCount; 5],
    total: [AcceptanceCount; 5],
    adapt_round: usize,
    in_block: Vec<bool>,
    rng: ChaCha8Rng,
}

fn slot(f: Family) -> usize {
    f as usize
}

impl Chain {
    /// Chain with the border adjacency rule "edges sharing an endpoint".
    pub fn new(data: Dataset, spec: ModelSpec, cfg: ChainConfig) -> Result<Self> {
        let edges = EdgeSet::from_graph(data.graph());
        let eg = EdgeGraph::shared_endpoint(&edges);
        Self::with_edge_graph(data, spec, cfg, eg)
    }

    pub fn with_edge_graph(
        data: Dataset,
        spec: ModelSpec,
        cfg: ChainConfig,
        edge_graph: EdgeGraph,
    ) -> Result<Self> {
        spec.validate()?;
        cfg.validate()?;
        let edges = EdgeSet::from_graph(data.graph());
        if edge_graph.n_edges() != edges.len() {
            return Err(Error::Dimension(format!(
                "border adjacency covers {} borders, graph has {}",
                edge_graph.n_edges(),
                edges.len()
            )));
        }
        if spec.variant.is_adaptive() && cfg.v_block_size > edges.len() {
            return Err(Error::domain(
                "v_block_size",
                format!("{} exceeds the {} borders", cfg.v_block_size, edges.len()),
            ));
        }
        let builder = PrecisionBuilder::for_graph(data.graph());
        let edge_builder = PrecisionBuilder::from_neighbors(edge_graph.adjacency_lists());
        let state = ParameterState::initial(&data, &spec, edges.len());
        let z = TemporalPrecision::new(state.alpha, data.n_times())?;
        let q = Self::precision_for(&builder, &spec, &state)?;
        let factor = factorize(&q)?;
        let n_cells = data.n_cells();
        let mut chain = Chain {
            offsets: data.linear_offsets(&state.beta),
            beta_shape: DMatrix::zeros(0, 0),
            observation: Observation::Poisson,
            window: Default::default(),
            total: Default::default(),
            adapt_round: 0,
            in_block: vec![false; edges.len()],
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            edge_factor: None,
            data,
            spec,
            cfg,
            edges,
            edge_graph,
            builder,
            edge_builder,
            state,
            z,
            q,
            factor,
        };
        debug_assert_eq!(chain.offsets.len(), n_cells);
        chain.refresh_edge_factor()?;
        chain.beta_shape = chain.fisher_shape()?;
        Ok(chain)
    }

    fn precision_for(
        builder: &PrecisionBuilder,
        spec: &ModelSpec,
        s: &ParameterState,
    ) -> Result<SparseSymMatrix> {
        match spec.variant {
            ModelVariant::GlobalAR => builder.leroux(s.rho, spec.epsilon),
            _ => builder.adaptive(s.w_plus(), spec.epsilon),
        }
    }

    fn refresh_edge_factor(&mut self) -> Result<()> {
        self.edge_factor = if self.spec.variant == ModelVariant::AdaptiveClustered {
            let qe = self
                .edge_builder
                .leroux(self.state.rho, self.spec.epsilon)?;
            Some(match &self.edge_factor {
                Some(f) => f.refactorize(&qe)?,
                None => factorize(&qe)?,
            })
        } else {
            None
        };
        Ok(())
    }

    /// Cholesky factor of the inverse Fisher information of `β` at the
    /// current state (plus the prior precision).
    fn fisher_shape(&self) -> Result<DMatrix<f64>> {
        let p = self.data.n_covariates();
        let mut info = DMatrix::<f64>::identity(p, p) / self.spec.prior_var_beta;
        for c in 0..self.data.n_cells() {
            let weight = match &self.observation {
                Observation::Poisson => {
                    self.data.expected()[c] * (self.offsets[c] + self.state.phi.as_slice()[c]).exp()
                }
                Observation::Gaussian { sd, .. } => 1.0 / (sd * sd),
            };
            let x = DVector::from_column_slice(self.data.covariates(c));
            info += weight * &x * x.transpose();
        }
        let cov = info
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariate information matrix is singular".into()))?
            .inverse();
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Numerical("singular beta proposal covariance".into()))?;
        Ok(chol.l())
    }

    /// Replaces the observation model (test hook for conjugate checks).
    pub fn set_observation(&mut self, observation: Observation) -> Result<()> {
        if let Observation::Gaussian { values, sd } = &observation {
            if values.len() != self.data.n_cells() || !(*sd > 0.0) {
                return Err(Error::Dimension(
                    "Gaussian hook needs one value per cell and a positive sd".into(),
                ));
            }
        }
        self.observation = observation;
        self.beta_shape = self.fisher_shape()?;
        Ok(())
    }

    /// Replaces the observed counts, keeping the parameter state.
    pub fn set_observed(&mut self, observed: Vec<u64>) -> Result<()> {
        self.data.set_observed(observed)
    }

    /// Installs a new parameter state and rebuilds every cached quantity.
    pub fn set_state(&mut self, mut s: ParameterState) -> Result<()> {
        if s.beta.len() != self.data.n_covariates()
            || s.phi.n_areas() != self.data.n_areas()
            || s.phi.n_times() != self.data.n_times()
            || s.v_plus().len() != self.edges.len()
        {
            return Err(Error::Dimension("state does not match the data".into()));
        }
        match self.spec.variant {
            ModelVariant::GlobalAR => s.set_unit_weights(),
            ModelVariant::AdaptiveIndependent => s.rho = 0.0,
            ModelVariant::AdaptiveClustered => {}
        }
        s.check_support(&self.spec)?;
        self.z = TemporalPrecision::new(s.alpha, self.data.n_times())?;
        self.q = Self::precision_for(&self.builder, &self.spec, &s)?;
        self.factor = self.factor.refactorize(&self.q)?;
        self.offsets = self.data.linear_offsets(&s.beta);
        self.state = s;
        self.refresh_edge_factor()
    }

    pub fn state(&self) -> &ParameterState {
        &self.state
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn edge_graph(&self) -> &EdgeGraph {
        &self.edge_graph
    }

    pub fn precision(&self) -> &SparseSymMatrix {
        &self.q
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn temporal(&self) -> &TemporalPrecision {
        &self.z
    }

    pub fn scale(&self, f: Family) -> f64 {
        self.cfg.scales.get(f)
    }

    pub fn set_scale(&mut self, f: Family, s: f64) {
        *self.cfg.scales.get_mut(f) = s;
    }

    pub fn acceptance(&self, f: Family) -> AcceptanceCount {
        self.total[slot(f)]
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Log-likelihood of one cell without terms constant in `η`.
    #[inline]
    fn cell_kernel(&self, c: usize, eta: f64) -> f64 {
        match &self.observation {
            Observation::Poisson => {
                self.data.observed()[c] as f64 * eta - self.data.expected()[c] * eta.exp()
            }
            Observation::Gaussian { values, sd } => -(values[c] - eta).powi(2) / (2.0 * sd * sd),
        }
    }

    /// Full log-likelihood including normalizing constants.
    pub fn log_likelihood(&self) -> f64 {
        let phi = self.state.phi.as_slice();
        let mut total = 0.0;
        for c in 0..self.data.n_cells() {
            let eta = self.offsets[c] + phi[c];
            total += match &self.observation {
                Observation::Poisson => {
                    let y = self.data.observed()[c] as f64;
                    y * (self.data.expected()[c].ln() + eta)
                        - self.data.expected()[c] * eta.exp()
                        - self.data.log_factorial(c)
                }
                Observation::Gaussian { values, sd } => {
                    -0.5 * (2.0 * PI * sd * sd).ln() - (values[c] - eta).powi(2) / (2.0 * sd * sd)
                }
            };
        }
        total
    }

    pub fn deviance(&self) -> f64 {
        -2.0 * self.log_likelihood()
    }

    /// Log posterior density (up to the marginal likelihood) at the current
    /// state, evaluated from scratch.
    pub fn log_joint(&self) -> Result<f64> {
        let s = &self.state;
        let mut lp = self.log_likelihood() + beta_log_prior(&s.beta, self.spec.prior_var_beta);
        lp += phi_log_density(&s.phi, s.tau2, &self.z, &self.q, &self.factor)?;
        lp += inverse_gamma_log_density(s.tau2, self.spec.prior_tau2);
        if self.spec.variant.is_adaptive() {
            lp += v_log_prior_normalized(
                s.v_plus(),
                s.zeta2,
                s.rho,
                s.mu,
                &self.edge_graph,
                self.spec.epsilon,
            )?;
            lp += inverse_gamma_log_density(s.zeta2, self.spec.prior_zeta2);
        }
        Ok(lp)
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio
    }

    fn record(&mut self, f: Family, accepted: bool) {
        self.window[slot(f)].record(accepted);
        self.total[slot(f)].record(accepted);
    }

    // ---- beta ----

    /// Log acceptance ratio of moving `β` to `beta_new`; `−∞` when the
    /// proposal overflows the linear predictor.
    pub fn beta_log_ratio(&self, beta_new: &[f64]) -> f64 {
        let phi = self.state.phi.as_slice();
        let new_offsets = self.data.linear_offsets(beta_new);
        let mut delta = 0.0;
        for c in 0..self.data.n_cells() {
            let eta_new = new_offsets[c] + phi[c];
            if !(eta_new.abs() <= MAX_LINEAR_PREDICTOR) {
                return f64::NEG_INFINITY;
            }
            delta += self.cell_kernel(c, eta_new) - self.cell_kernel(c, self.offsets[c] + phi[c]);
        }
        let v = self.spec.prior_var_beta;
        delta + beta_log_prior(beta_new, v) - beta_log_prior(&self.state.beta, v)
    }

    /// Joint random-walk update of the regression coefficients.
    pub fn update_beta(&mut self) {
        let p = self.data.n_covariates();
        let scale = self.cfg.scales.beta;
        if p == 0 || scale == 0.0 {
            return;
        }
        let z = DVector::from_iterator(p, (0..p).map(|_| self.normal()));
        let step = &self.beta_shape * z * scale;
        let proposal: Vec<f64> = self
            .state
            .beta
            .iter()
            .zip(step.iter())
            .map(|(b, s)| b + s)
            .collect();
        let ratio = self.beta_log_ratio(&proposal);
        let ok = self.accept(ratio);
        if ok {
            self.offsets = self.data.linear_offsets(&proposal);
            self.state.beta = proposal;
        }
        self.record(Family::Beta, ok);
    }

    // ---- phi ----

    /// `c` and `a` such that the prior log-kernel of `φ_ij = x` is
    /// `−(a x² + 2 c x) / (2τ²)` given all other random effects.
    #[inline]
    fn phi_prior_coefficients(&self, i: usize, j: usize) -> (f64, f64) {
        let n = self.data.n_areas();
        let t = self.data.n_times();
        let phi = self.state.phi.as_slice();
        let zjj = self.z.diag(j);
        let off = self.z.off_diag();
        let mut same = 0.0;
        let mut prev = 0.0;
        let mut next = 0.0;
        let mut qii = 0.0;
        for (k, v) in self.q.row(i) {
            if k == i {
                qii = v;
            } else {
                same += v * phi[j * n + k];
            }
            if j > 0 {
                prev += v * phi[(j - 1) * n + k];
            }
            if j + 1 < t {
                next += v * phi[(j + 1) * n + k];
            }
        }
        (zjj * qii, zjj * same + off * (prev + next))
    }

    /// Log acceptance ratio of moving `φ_ij` to `x`. Uses only the spatial
    /// neighbors of `i` and the periods `j ± 1`.
    pub fn phi_log_ratio(&self, i: usize, j: usize, x: f64) -> f64 {
        let c = j * self.data.n_areas() + i;
        let cur = self.state.phi.as_slice()[c];
        let eta_new = self.offsets[c] + x;
        if !(eta_new.abs() <= MAX_LINEAR_PREDICTOR) {
            return f64::NEG_INFINITY;
        }
        let (a, b) = self.phi_prior_coefficients(i, j);
        let prior = -(a * (x * x - cur * cur) + 2.0 * b * (x - cur)) / (2.0 * self.state.tau2);
        self.cell_kernel(c, eta_new) - self.cell_kernel(c, self.offsets[c] + cur) + prior
    }

    /// One-at-a-time random-walk sweep over all cells, period by period.
    pub fn update_phi(&mut self) {
        let scale = self.cfg.scales.phi;
        if scale == 0.0 {
            return;
        }
        let n = self.data.n_areas();
        for j in 0..self.data.n_times() {
            for i in 0..n {
                let x = self.state.phi.as_slice()[j * n + i] + scale * self.normal();
                let ratio = self.phi_log_ratio(i, j, x);
                let ok = self.accept(ratio);
                if ok {
                    self.state.phi.as_mut_slice()[j * n + i] = x;
                }
                self.record(Family::Phi, ok);
            }
        }
    }

    // ---- tau2 ----

    /// Full conditional of `τ²`.
    pub fn tau2_conditional(&self) -> InverseGamma {
        let quad = PeriodForms::compute(&self.state.phi, &self.q).combine(&self.z);
        let prior = self.spec.prior_tau2;
        InverseGamma::new(
            prior.shape + 0.5 * self.data.n_cells() as f64,
            prior.scale + 0.5 * quad,
        )
    }

    fn draw_inverse_gamma(&mut self, ig: InverseGamma) -> f64 {
        let g = Gamma::new(ig.shape, 1.0 / ig.scale).expect("positive gamma parameters");
        1.0 / g.sample(&mut self.rng)
    }

    pub fn update_tau2(&mut self) {
        let ig = self.tau2_conditional();
        let draw = self.draw_inverse_gamma(ig);
        if draw > 0.0 && draw.is_finite() {
            self.state.tau2 = draw;
        }
    }

    // ---- alpha ----

    pub fn alpha_log_ratio(&self, alpha_new: f64) -> f64 {
        let Ok(z_new) = TemporalPrecision::new(alpha_new, self.data.n_times()) else {
            return f64::NEG_INFINITY;
        };
        let forms = PeriodForms::compute(&self.state.phi, &self.q);
        -(forms.combine(&z_new) - forms.combine(&self.z)) / (2.0 * self.state.tau2)
    }

    /// Reflective random walk on `α ∈ [0, 1)`.
    pub fn update_alpha(&mut self) {
        let scale = self.cfg.scales.alpha;
        if scale == 0.0 {
            return;
        }
        let prop = reflect_unit(self.state.alpha + scale * self.normal());
        let ratio = if self.data.n_times() == 1 {
            if prop < 1.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            self.alpha_log_ratio(prop)
        };
        let ok = self.accept(ratio);
        if ok {
            self.state.alpha = prop;
            self.z = TemporalPrecision::new(prop, self.data.n_times()).expect("alpha checked");
        }
        self.record(Family::Alpha, ok);
    }

    // ---- border logits ----

    /// Change in the border-logit prior exponent when the `edges` take the
    /// values `v_new` (uses only pairs touching the block).
    fn v_prior_delta(&mut self, edges: &[usize], v_new: &[f64]) -> f64 {
        let s = &self.state;
        let v = s.v_plus();
        for &e in edges {
            self.in_block[e] = true;
        }
        let new_value = |e: usize| edges.iter().position(|&x| x == e).map(|p| v_new[p]);
        let mut pairs = 0.0;
        let mut centred = 0.0;
        for (p, &a) in edges.iter().enumerate() {
            let (va, na) = (v[a], v_new[p]);
            centred += (na - s.mu).powi(2) - (va - s.mu).powi(2);
            for &b in self.edge_graph.neighbors(a) {
                if self.in_block[b] {
                    if a < b {
                        let nb = new_value(b).expect("block member");
                        pairs += (na - nb).powi(2) - (va - v[b]).powi(2);
                    }
                } else {
                    pairs += (na - v[b]).powi(2) - (va - v[b]).powi(2);
                }
            }
        }
        for &e in edges {
            self.in_block[e] = false;
        }
        -(s.rho * pairs + (1.0 - s.rho) * centred) / (2.0 * s.zeta2)
    }

    /// Evaluates a joint move of the border logits in `edges` to `v_new`,
    /// refactorizing only the part of the Cholesky factor that depends on
    /// the changed borders. Out-of-bound values give a `−∞` ratio.
    pub fn v_block_proposal(&mut self, edges: &[usize], v_new: &[f64]) -> Result<VBlockProposal> {
        if edges.len() != v_new.len() || edges.iter().any(|&e| e >= self.edges.len()) {
            return Err(Error::Dimension("block edges and values disagree".into()));
        }
        let bound = self.spec.v_bound;
        if v_new.iter().any(|v| !(v.abs() <= bound)) {
            return Ok(VBlockProposal {
                edges: edges.to_vec(),
                v_new: v_new.to_vec(),
                log_ratio: f64::NEG_INFINITY,
                q: self.q.clone(),
                factor: self.factor.clone(),
            });
        }
        let mut w = self.state.w_plus().to_vec();
        let n = self.data.n_areas();
        let t = self.data.n_times();
        let phi = self.state.phi.as_slice();
        let mut delta_quad = 0.0;
        let mut nodes = Vec::with_capacity(2 * edges.len());
        for (p, &e) in edges.iter().enumerate() {
            let w_new = logit_inv(v_new[p]);
            let (i, k) = self.edges.endpoints(e);
            let mut s_e = 0.0;
            let mut d_prev = 0.0;
            for j in 0..t {
                let d = phi[j * n + i] - phi[j * n + k];
                s_e += self.z.diag(j) * d * d;
                if j > 0 {
                    s_e += 2.0 * self.z.off_diag() * d_prev * d;
                }
                d_prev = d;
            }
            delta_quad += (w_new - w[e]) * s_e;
            w[e] = w_new;
            nodes.push(i);
            nodes.push(k);
        }
        let mut q = self.q.clone();
        self.builder
            .update_edges(&mut q, edges, &w, self.spec.epsilon)?;
        let factor = self.factor.refactorize_partial(&q, &nodes)?;
        let delta_logdet = factor.log_det() - self.factor.log_det();
        let log_ratio = 0.5 * t as f64 * delta_logdet - delta_quad / (2.0 * self.state.tau2)
            + self.v_prior_delta(edges, v_new);
        Ok(VBlockProposal {
            edges: edges.to_vec(),
            v_new: v_new.to_vec(),
            log_ratio,
            q,
            factor,
        })
    }

    fn install_v(&mut self, prop: VBlockProposal) {
        for (p, &e) in prop.edges.iter().enumerate() {
            self.state.set_v(e, prop.v_new[p]);
        }
        self.q = prop.q;
        self.factor = prop.factor;
    }

    /// Blocked random-walk updates of the border logits in canonical edge order.
    pub fn update_v_blocks(&mut self) -> Result<()> {
        let scale = self.cfg.scales.v;
        if !self.spec.variant.is_adaptive() || scale == 0.0 {
            return Ok(());
        }
        let m = self.edges.len();
        let size = self.cfg.v_block_size;
        let mut start = 0;
        while start < m {
            let block: Vec<usize> = (start..(start + size).min(m)).collect();
            let v_new: Vec<f64> = block
                .iter()
                .map(|&e| self.state.v_plus()[e] + scale * self.normal())
                .collect();
            let ok = if v_new.iter().any(|v| !(v.abs() <= self.spec.v_bound)) {
                false
            } else {
                let prop = self.v_block_proposal(&block, &v_new)?;
                let ok = self.accept(prop.log_ratio);
                if ok {
                    self.install_v(prop);
                }
                ok
            };
            self.record(Family::V, ok);
            start += size;
        }
        Ok(())
    }

    // ---- zeta2 ----

    /// Full conditional of `ζ²`.
    pub fn zeta2_conditional(&self) -> Result<InverseGamma> {
        let s = &self.state;
        let (pairs, centred) = v_prior_sums(s.v_plus(), s.mu, &self.edge_graph)?;
        let prior = self.spec.prior_zeta2;
        Ok(InverseGamma::new(
            prior.shape + 0.5 * self.edges.len() as f64,
            prior.scale + 0.5 * (s.rho * pairs + (1.0 - s.rho) * centred),
        ))
    }

    pub fn update_zeta2(&mut self) -> Result<()> {
        if !self.spec.variant.is_adaptive() {
            return Ok(());
        }
        let ig = self.zeta2_conditional()?;
        let draw = self.draw_inverse_gamma(ig);
        if draw > 0.0 && draw.is_finite() {
            self.state.zeta2 = draw;
        }
        Ok(())
    }

    // ---- rho ----

    /// Log acceptance ratio of moving `ρ` to `rho_new`, with the factor that
    /// would be installed on acceptance.
    fn rho_move(&self, rho_new: f64) -> Result<(f64, Option<(SparseSymMatrix, CholeskyFactor)>)> {
        if !(0.0..=1.0).contains(&rho_new) {
            return Ok((f64::NEG_INFINITY, None));
        }
        let s = &self.state;
        match self.spec.variant {
            ModelVariant::AdaptiveIndependent => Ok((
                if rho_new == 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                },
                None,
            )),
            ModelVariant::GlobalAR => {
                let q_new = self.builder.leroux(rho_new, self.spec.epsilon)?;
                let f_new = self.factor.refactorize(&q_new)?;
                let t = self.data.n_times() as f64;
                let quad_old = PeriodForms::compute(&s.phi, &self.q).combine(&self.z);
                let quad_new = PeriodForms::compute(&s.phi, &q_new).combine(&self.z);
                let ratio = 0.5 * t * (f_new.log_det() - self.factor.log_det())
                    - (quad_new - quad_old) / (2.0 * s.tau2);
                Ok((ratio, Some((q_new, f_new))))
            }
            ModelVariant::AdaptiveClustered => {
                let qe = self.edge_builder.leroux(rho_new, self.spec.epsilon)?;
                let current = self
                    .edge_factor
                    .as_ref()
                    .expect("clustered chain keeps a border factor");
                let fe = current.refactorize(&qe)?;
                let (pairs, centred) = v_prior_sums(s.v_plus(), s.mu, &self.edge_graph)?;
                let d_rho = rho_new - s.rho;
                let ratio = 0.5 * (fe.log_det() - current.log_det())
                    - d_rho * (pairs - centred) / (2.0 * s.zeta2);
                Ok((ratio, Some((qe, fe))))
            }
        }
    }

    pub fn rho_log_ratio(&self, rho_new: f64) -> Result<f64> {
        Ok(self.rho_move(rho_new)?.0)
    }

    /// Reflective random walk on `ρ ∈ [0, 1]` (spatial `ρ` for the global
    /// model, border-prior `ρ` for the clustered model).
    pub fn update_rho(&mut self) -> Result<()> {
        let scale = self.cfg.scales.rho;
        if self.spec.variant == ModelVariant::AdaptiveIndependent || scale == 0.0 {
            return Ok(());
        }
        let prop = reflect_unit(self.state.rho + scale * self.normal());
        let (ratio, parts) = self.rho_move(prop)?;
        let ok = self.accept(ratio);
        if ok {
            self.state.rho = prop;
            if let Some((q, f)) = parts {
                if self.spec.variant == ModelVariant::GlobalAR {
                    self.q = q;
                    self.factor = f;
                } else {
                    self.edge_factor = Some(f);
                }
            }
        }
        self.record(Family::Rho, ok);
        Ok(())
    }

    /// One full sweep in the fixed order `β, φ, τ², α, v⁺, ζ², ρ`.
    pub fn sweep(&mut self) -> Result<()> {
        self.update_beta();
        self.update_phi();
        self.update_tau2();
        self.update_alpha();
        self.update_v_blocks()?;
        self.update_zeta2()?;
        self.update_rho()
    }

    fn active(&self, f: Family) -> bool {
        let v = self.spec.variant;
        let on = match f {
            Family::Beta => self.data.n_covariates() > 0,
            Family::Phi => true,
            Family::Alpha => self.data.n_times() > 1,
            Family::V => v.is_adaptive(),
            Family::Rho => v != ModelVariant::AdaptiveIndependent,
        };
        on && self.cfg.scales.get(f) > 0.0
    }

    /// Robbins-Monro step on the log proposal scales toward the target
    /// acceptance rates, using the counts of the finished window.
    fn adapt(&mut self) {
        self.adapt_round += 1;
        let gain = 2.0 / (self.adapt_round as f64).sqrt();
        for f in Family::ALL {
            let w = self.window[slot(f)];
            if w.proposed == 0 || !self.active(f) {
                continue;
            }
            let cap = match f {
                Family::Alpha | Family::Rho => 1.0,
                Family::V => 2.0 * self.spec.v_bound,
                Family::Phi => 10.0,
                Family::Beta => 1e3,
            };
            let target = self.cfg.target(f);
            let s = self.cfg.scales.get_mut(f);
            *s = (*s * (gain * (w.rate() - target)).exp()).clamp(1e-8, cap);
        }
    }

    fn check_stuck(&self, iteration: usize) -> Result<()> {
        for f in Family::ALL {
            let w = self.window[slot(f)];
            if !self.active(f) || w.proposed == 0 {
                continue;
            }
            if w.accepted == 0 || w.accepted == w.proposed {
                return Err(Error::StuckChain {
                    family: f.name().to_string(),
                    rate: w.rate(),
                    iteration,
                });
            }
        }
        Ok(())
    }

    /// Runs the configured number of iterations and returns the retained draws.
    pub fn run(mut self) -> Result<McmcSamples> {
        let cfg = self.cfg.clone();
        let mut out = McmcSamples::empty(
            self.spec.variant,
            self.data.n_areas(),
            self.data.n_times(),
            self.edges.edges().to_vec(),
            self.data.n_covariates(),
            cfg.seed,
        );
        for it in 0..cfg.n_sample {
            if it == cfg.burnin {
                self.window = Default::default();
                self.total = Default::default();
            }
            self.sweep()?;
            if it < cfg.burnin {
                if (it + 1) % cfg.adapt_interval == 0 {
                    self.adapt();
                    self.window = Default::default();
                }
                continue;
            }
            let since = it + 1 - cfg.burnin;
            if since % cfg.adapt_interval == 0 {
                if cfg.abort_on_stuck {
                    self.check_stuck(it + 1)?;
                }
                self.window = Default::default();
            }
            if since % cfg.thin == 0 {
                debug_assert!(self.state.check_support(&self.spec).is_ok());
                out.push(&self.state, self.deviance());
            }
        }
        out.acceptance = Family::ALL
            .into_iter()
            .filter(|&f| self.active(f))
            .map(|f| (f, self.total[slot(f)]))
            .collect();
        Ok(out)
    }
}

/// Folds `x` into `[0, 1]` by reflection at both ends.
pub fn reflect_unit(mut x: f64) -> f64 {
    if !x.is_finite() {
        return 0.5;
    }
    x = x.rem_euclid(2.0);
    if x > 1.0 {
        2.0 - x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_stays_in_unit_interval() {
        for k in -40..40 {
            let x = k as f64 * 0.173;
            let r = reflect_unit(x);
            assert!((0.0..=1.0).contains(&r), "{x} -> {r}");
        }
        assert!((reflect_unit(-0.2) - 0.2).abs() < 1e-15);
        assert!((reflect_unit(1.3) - 0.7).abs() < 1e-15);
        assert_eq!(reflect_unit(0.4), 0.4);
    }
}
