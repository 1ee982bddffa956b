use crate::error::{Error, Result};

/// Tridiagonal precision of a first-order autoregressive chain of `T`
/// spatial fields: `φ₁ ~ N(0, τ²Q⁻¹)`, `φⱼ | φⱼ₋₁ ~ N(αφⱼ₋₁, τ²Q⁻¹)`.
///
/// Expanding `φ₁ᵀQφ₁ + Σⱼ (φⱼ − αφⱼ₋₁)ᵀQ(φⱼ − αφⱼ₋₁)` gives diagonal
/// `(1 + α², …, 1 + α², 1)` and off-diagonal `−α`. Its determinant is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalPrecision {
    n_times: usize,
    alpha: f64,
}

impl TemporalPrecision {
    pub fn new(alpha: f64, n_times: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::domain("alpha", format!("{alpha} outside [0, 1)")));
        }
        if n_times == 0 {
            return Err(Error::domain("T", "need at least one time period"));
        }
        Ok(TemporalPrecision { n_times, alpha })
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn diag(&self, j: usize) -> f64 {
        if j + 1 < self.n_times {
            1.0 + self.alpha * self.alpha
        } else {
            1.0
        }
    }

    /// Entry `(j, j + 1)`.
    pub fn off_diag(&self) -> f64 {
        -self.alpha
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.diag(a)
        } else if a.abs_diff(b) == 1 {
            self.off_diag()
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_times)
            .map(|a| (0..self.n_times).map(|b| self.get(a, b)).collect())
            .collect()
    }

    /// Determinant by the tridiagonal three-term recurrence.
    pub fn determinant(&self) -> f64 {
        let (mut prev, mut cur) = (1.0, self.diag(0));
        for j in 1..self.n_times {
            let next = self.diag(j) * cur - self.alpha * self.alpha * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Always zero; kept so density code reads like the formula.
    pub fn log_det(&self) -> f64 {
        0.0
    }
}

/// `Z(α)` for `T` periods.
pub fn build_ar1_z(alpha: f64, n_times: usize) -> Result<TemporalPrecision> {
    TemporalPrecision::new(alpha, n_times)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independence_and_single_period() {
        let z = build_ar1_z(0.0, 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(z.get(a, b), if a == b { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(build_ar1_z(0.7, 1).unwrap().to_dense(), vec![vec![1.0]]);
    }

    #[test]
    fn half_alpha_three_periods() {
        // Collecting coefficients of φ₁ᵀQφ₁ + Σⱼ(φⱼ−αφⱼ₋₁)ᵀQ(φⱼ−αφⱼ₋₁) by hand.
        let z = build_ar1_z(0.5, 3).unwrap().to_dense();
        assert_eq!(
            z,
            vec![
                vec![1.25, -0.5, 0.0],
                vec![-0.5, 1.25, -0.5],
                vec![0.0, -0.5, 1.0]
            ]
        );
    }

    #[test]
    fn rejects_alpha_out_of_range() {
        assert!(build_ar1_z(1.0, 3).is_err());
        assert!(build_ar1_z(-0.1, 3).is_err());
        assert!(build_ar1_z(0.5, 0).is_err());
    }

    #[test]
    fn determinant_is_one() {
        for alpha in [0.0, 0.25, 0.5, 0.9, 0.99] {
            for t in 1..=50 {
                assert!((build_ar1_z(alpha, t).unwrap().determinant() - 1.0).abs() < 1e-12);
            }
        }
    }
}
