use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::AreaGraph;

/// Observed counts, expected counts and covariates over `N` areas and `T`
/// periods, all in time-major cell order (`cell = time * N + area`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_areas: usize,
    n_times: usize,
    observed: Vec<u64>,
    expected: Vec<f64>,
    /// Row-major `(N·T) × p` design.
    design: Vec<f64>,
    n_covariates: usize,
    covariate_names: Vec<String>,
    graph: AreaGraph,
    log_factorials: Vec<f64>,
}

impl Dataset {
    pub fn new(
        graph: AreaGraph,
        n_times: usize,
        observed: Vec<u64>,
        expected: Vec<f64>,
        design: Vec<f64>,
        n_covariates: usize,
    ) -> Result<Self> {
        let n_areas = graph.n_areas();
        let cells = n_areas * n_times;
        if n_times == 0 {
            return Err(Error::domain("T", "need at least one time period"));
        }
        if observed.len() != cells || expected.len() != cells {
            return Err(Error::Dimension(format!(
                "{} observed and {} expected values for {cells} cells",
                observed.len(),
                expected.len()
            )));
        }
        if design.len() != cells * n_covariates {
            return Err(Error::Dimension(format!(
                "design has {} entries, expected {}",
                design.len(),
                cells * n_covariates
            )));
        }
        for (c, &e) in expected.iter().enumerate() {
            if e <= 0.0 || !e.is_finite() {
                if e == 0.0 {
                    return Err(Error::ZeroExpected {
                        area: c % n_areas,
                        time: c / n_areas,
                    });
                }
                return Err(Error::domain(
                    "expected",
                    format!("{e} at cell (area {}, time {})", c % n_areas, c / n_areas),
                ));
            }
        }
        if let Some(c) = design.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(
                "covariate",
                format!("non-finite value in design row {}", c / n_covariates.max(1)),
            ));
        }
        let log_factorials = observed.iter().map(|&y| ln_gamma(y as f64 + 1.0)).collect();
        let covariate_names = (1..=n_covariates).map(|r| format!("cov{r}")).collect();
        Ok(Dataset {
            n_areas,
            n_times,
            observed,
            expected,
            design,
            n_covariates,
            covariate_names,
            graph,
            log_factorials,
        })
    }

    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_covariates {
            return Err(Error::Dimension(format!(
                "{} names for {} covariates",
                names.len(),
                self.n_covariates
            )));
        }
        self.covariate_names = names;
        Ok(self)
    }

    pub fn n_areas(&self) -> usize {
        self.n_areas
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn n_cells(&self) -> usize {
        self.n_areas * self.n_times
    }

    pub fn n_covariates(&self) -> usize {
        self.n_covariates
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn graph(&self) -> &AreaGraph {
        &self.graph
    }

    pub fn observed(&self) -> &[u64] {
        &self.observed
    }

    pub fn expected(&self) -> &[f64] {
        &self.expected
    }

    pub fn design(&self) -> &[f64] {
        &self.design
    }

    /// Covariate row of a cell.
    pub fn covariates(&self, cell: usize) -> &[f64] {
        &self.design[cell * self.n_covariates..(cell + 1) * self.n_covariates]
    }

    pub fn log_factorial(&self, cell: usize) -> f64 {
        self.log_factorials[cell]
    }

    /// `x_cellᵀ β` for every cell.
    pub fn linear_offsets(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n_cells())
            .map(|c| {
                self.covariates(c)
                    .iter()
                    .zip(beta)
                    .map(|(x, b)| x * b)
                    .sum()
            })
            .collect()
    }

    /// Replaces the counts (used by prior-predictive simulation).
    pub fn set_observed(&mut self, observed: Vec<u64>) -> Result<()> {
        if observed.len() != self.n_cells() {
            return Err(Error::Dimension(format!(
                "{} counts for {} cells",
                observed.len(),
                self.n_cells()
            )));
        }
        self.log_factorials = observed.iter().map(|&y| ln_gamma(y as f64 + 1.0)).collect();
        self.observed = observed;
        Ok(())
    }
}
