//! Quadratic forms and Gaussian log-densities under `Z(α) ⊗ Q`, evaluated
//! period by period without forming the Kronecker product.

use std::f64::consts::PI;

use super::cholesky::CholeskyFactor;
use super::sparse::SparseSymMatrix;
use super::temporal::TemporalPrecision;
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;

fn check_dims(phi: &SpaceTimeField, z: &TemporalPrecision, n: usize) -> Result<()> {
    if phi.n_areas() != n || phi.n_times() != z.n_times() {
        return Err(Error::Dimension(format!(
            "field is {}x{}, precision is {n}x{}",
            phi.n_areas(),
            phi.n_times(),
            z.n_times()
        )));
    }
    Ok(())
}

/// Per-period bilinear terms `φⱼᵀQφⱼ` and `φⱼᵀQφⱼ₊₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodForms {
    pub diag: Vec<f64>,
    pub cross: Vec<f64>,
}

impl PeriodForms {
    pub fn compute(phi: &SpaceTimeField, q: &SparseSymMatrix) -> Self {
        let t = phi.n_times();
        let qphi: Vec<Vec<f64>> = (0..t).map(|j| q.mul_vec(phi.period(j))).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let diag = (0..t).map(|j| dot(phi.period(j), &qphi[j])).collect();
        let cross = (1..t).map(|j| dot(phi.period(j - 1), &qphi[j])).collect();
        PeriodForms { diag, cross }
    }

    /// `φᵀ(Z ⊗ Q)φ` for the given `Z`.
    pub fn combine(&self, z: &TemporalPrecision) -> f64 {
        let mut s = 0.0;
        for (j, d) in self.diag.iter().enumerate() {
            s += z.diag(j) * d;
        }
        let c: f64 = self.cross.iter().sum();
        s + 2.0 * z.off_diag() * c
    }
}

/// `φᵀ[Z(α) ⊗ Q]φ`.
pub fn st_quad_form(
    phi: &SpaceTimeField,
    z: &TemporalPrecision,
    q: &SparseSymMatrix,
) -> Result<f64> {
    check_dims(phi, z, q.dim())?;
    Ok(PeriodForms::compute(phi, q).combine(z))
}

/// Log-density of `φ ~ N(0, τ²(Z ⊗ Q)⁻¹)`:
/// `−(NT/2)log(2πτ²) + (N/2)log|Z| + (T/2)log|Q| − quad/(2τ²)`.
pub fn phi_log_density(
    phi: &SpaceTimeField,
    tau2: f64,
    z: &TemporalPrecision,
    q: &SparseSymMatrix,
    q_factor: &CholeskyFactor,
) -> Result<f64> {
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(Error::domain("tau2", format!("{tau2} must be positive")));
    }
    if q_factor.dim() != q.dim() {
        return Err(Error::Dimension("factor and matrix sizes differ".into()));
    }
    let quad = st_quad_form(phi, z, q)?;
    Ok(log_density_from_parts(
        phi.n_areas(),
        phi.n_times(),
        tau2,
        z.log_det(),
        q_factor.log_det(),
        quad,
    ))
}

pub(crate) fn log_density_from_parts(
    n: usize,
    t: usize,
    tau2: f64,
    log_det_z: f64,
    log_det_q: f64,
    quad: f64,
) -> f64 {
    let nt = (n * t) as f64;
    -0.5 * nt * (2.0 * PI * tau2).ln() + 0.5 * n as f64 * log_det_z + 0.5 * t as f64 * log_det_q
        - quad / (2.0 * tau2)
}
