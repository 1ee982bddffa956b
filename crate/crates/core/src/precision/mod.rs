//! Precision-matrix algebra: graph precisions, the AR(1) temporal precision,
//! sparse Cholesky with partial refactorization, and Kronecker-structured
//! quadratic forms.

pub mod cholesky;
pub mod kron;
pub mod ordering;
pub mod sparse;
pub mod temporal;

pub use cholesky::{factorize, CholeskyFactor, SymbolicCholesky, PIVOT_TOLERANCE};
pub use kron::{phi_log_density, st_quad_form, PeriodForms};
pub use ordering::Ordering;
pub use sparse::{build_adaptive_q, build_leroux_q, PrecisionBuilder, SparseSymMatrix, SymPattern};
pub use temporal::{build_ar1_z, TemporalPrecision};

use crate::error::Result;
use crate::graph::EdgeSet;

/// `log|Q|` from a factor.
pub fn log_det(f: &CholeskyFactor) -> f64 {
    f.log_det()
}

/// Partial refactorization after the weights of `changed_edges` changed.
pub fn refactorize_after_edge_change(
    f: &CholeskyFactor,
    q_new: &SparseSymMatrix,
    edges: &EdgeSet,
    changed_edges: &[usize],
) -> Result<CholeskyFactor> {
    let mut nodes = Vec::with_capacity(2 * changed_edges.len());
    for &e in changed_edges {
        if e >= edges.len() {
            return Err(crate::error::Error::EdgeOutOfRange {
                index: e,
                n_edges: edges.len(),
            });
        }
        let (i, k) = edges.endpoints(e);
        nodes.push(i);
        nodes.push(k);
    }
    f.refactorize_partial(q_new, &nodes)
}
