use crate::error::{Error, Result};

/// Area × time array stored time-major: the `N` values of period 0, then
/// period 1, and so on. This is the ordering of `Z ⊗ Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    n_areas: usize,
    n_times: usize,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(n_areas: usize, n_times: usize) -> Self {
        SpaceTimeField {
            n_areas,
            n_times,
            values: vec![0.0; n_areas * n_times],
        }
    }

    pub fn from_vec(n_areas: usize, n_times: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_areas * n_times {
            return Err(Error::Dimension(format!(
                "{} values for a {n_areas}x{n_times} field",
                values.len()
            )));
        }
        Ok(SpaceTimeField {
            n_areas,
            n_times,
            values,
        })
    }

    pub fn n_areas(&self) -> usize {
        self.n_areas
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, area: usize, time: usize) -> usize {
        time * self.n_areas + area
    }

    #[inline]
    pub fn get(&self, area: usize, time: usize) -> f64 {
        self.values[time * self.n_areas + area]
    }

    #[inline]
    pub fn set(&mut self, area: usize, time: usize, value: f64) {
        self.values[time * self.n_areas + area] = value;
    }

    /// The spatial field of one period.
    pub fn period(&self, time: usize) -> &[f64] {
        &self.values[time * self.n_areas..(time + 1) * self.n_areas]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SpaceTimeField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }
}
