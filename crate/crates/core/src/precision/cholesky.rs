//! Left-looking sparse Cholesky with a reusable symbolic analysis.
//!
//! The factor satisfies `P Q Pᵀ = L Lᵀ` where `(P x)[j] = x[perm[j]]`.
//! Column `j` of `L` is computed from column `j` of the permuted matrix and
//! from the columns `k < j` with `L[j, k] ≠ 0`, all of which are descendants
//! of `j` in the elimination tree. When only a few rows/columns of `Q`
//! change, the columns that need recomputing are exactly the elimination-tree
//! ancestors of the changed columns; every other column is reused as is, and
//! the recomputed columns go through the same arithmetic as a full
//! factorization, so the result is bitwise identical.

use std::sync::Arc;

use super::ordering::Ordering;
use super::sparse::{SparseSymMatrix, SymPattern};
use crate::error::{Error, Result};

/// Pivots at or below this value are reported as loss of positive definiteness.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

const NONE: usize = usize::MAX;

#[derive(Debug)]
pub struct SymbolicCholesky {
    n: usize,
    pattern: Arc<SymPattern>,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// Row `j` of `L` left of the diagonal: `(column k, storage position of L[j, k])`.
    row_ptr: Vec<usize>,
    row_entries: Vec<(usize, usize)>,
    /// Lower part of permuted column `j` of `Q`: `(permuted row, position in Q values)`.
    a_ptr: Vec<usize>,
    a_entries: Vec<(usize, usize)>,
}

impl SymbolicCholesky {
    pub fn analyze(pattern: &Arc<SymPattern>, ordering: Ordering) -> Self {
        let n = pattern.dim();
        let perm = ordering.permutation(pattern);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Permuted column j split into strictly-upper rows (for the tree and
        // row structure) and lower rows with their value positions.
        let mut upper: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut a_ptr = Vec::with_capacity(n + 1);
        let mut a_entries = Vec::with_capacity(pattern.nnz() / 2 + n);
        a_ptr.push(0);
        for j in 0..n {
            let old = perm[j];
            let mut lower = Vec::new();
            for p in pattern.row_range(old) {
                let r = iperm[pattern.col_idx()[p]];
                if r < j {
                    upper[j].push(r);
                } else {
                    lower.push((r, p));
                }
            }
            lower.sort_unstable();
            upper[j].sort_unstable();
            a_entries.extend(lower);
            a_ptr.push(a_entries.len());
        }

        // Elimination tree (Liu's algorithm with path compression).
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for j in 0..n {
            for &start in &upper[j] {
                let mut i = start;
                while i != NONE && i < j {
                    let next = ancestor[i];
                    ancestor[i] = j;
                    if next == NONE {
                        parent[i] = j;
                    }
                    i = next;
                }
            }
        }

        // Row structures via elimination-tree reach.
        let mut mark = vec![NONE; n];
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut counts = vec![1usize; n];
        for j in 0..n {
            mark[j] = j;
            let mut reach = Vec::new();
            for &start in &upper[j] {
                let mut r = start;
                while mark[r] != j {
                    reach.push(r);
                    mark[r] = j;
                    r = parent[r];
                }
            }
            reach.sort_unstable();
            for &k in &reach {
                counts[k] += 1;
            }
            rows.push(reach);
        }

        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        for j in 0..n {
            col_ptr.push(col_ptr[j] + counts[j]);
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0; nnz];
        let mut next: Vec<usize> = col_ptr[..n].to_vec();
        for j in 0..n {
            row_idx[next[j]] = j;
            next[j] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut row_entries = Vec::with_capacity(nnz - n);
        row_ptr.push(0);
        for (j, reach) in rows.iter().enumerate() {
            for &k in reach {
                let pos = next[k];
                row_idx[pos] = j;
                next[k] += 1;
                row_entries.push((k, pos));
            }
            row_ptr.push(row_entries.len());
        }

        SymbolicCholesky {
            n,
            pattern: pattern.clone(),
            perm,
            iperm,
            parent,
            col_ptr,
            row_idx,
            row_ptr,
            row_entries,
            a_ptr,
            a_entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros in `L`, diagonal included.
    pub fn nnz(&self) -> usize {
        self.col_ptr[self.n]
    }

    /// `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Elimination-tree parent of permuted column `j`, `None` at a root.
    pub fn parent(&self, j: usize) -> Option<usize> {
        (self.parent[j] != NONE).then_some(self.parent[j])
    }

    fn accepts(&self, q: &SparseSymMatrix) -> bool {
        Arc::ptr_eq(&self.pattern, q.pattern()) || *self.pattern == **q.pattern()
    }

    /// Permuted columns whose values depend on the given original rows:
    /// the union of their elimination-tree ancestor paths, ascending.
    pub fn affected_columns(&self, nodes: &[usize]) -> Vec<usize> {
        let mut mark = vec![false; self.n];
        let mut cols = Vec::new();
        for &node in nodes {
            let mut j = self.iperm[node];
            while j != NONE && !mark[j] {
                mark[j] = true;
                cols.push(j);
                j = self.parent[j];
            }
        }
        cols.sort_unstable();
        cols
    }

    fn factor_columns(
        &self,
        q: &[f64],
        values: &mut [f64],
        cols: impl Iterator<Item = usize>,
    ) -> Result<()> {
        let mut work = vec![0.0; self.n];
        for j in cols {
            let (c0, c1) = (self.col_ptr[j], self.col_ptr[j + 1]);
            for p in c0..c1 {
                work[self.row_idx[p]] = 0.0;
            }
            for &(r, pos) in &self.a_entries[self.a_ptr[j]..self.a_ptr[j + 1]] {
                work[r] = q[pos];
            }
            for &(k, pjk) in &self.row_entries[self.row_ptr[j]..self.row_ptr[j + 1]] {
                let ljk = values[pjk];
                for p in pjk..self.col_ptr[k + 1] {
                    work[self.row_idx[p]] -= values[p] * ljk;
                }
            }
            let d = work[j];
            if !(d > PIVOT_TOLERANCE) {
                return Err(Error::NotPositiveDefinite {
                    pivot: self.perm[j],
                    value: d,
                });
            }
            let ljj = d.sqrt();
            values[c0] = ljj;
            for p in c0 + 1..c1 {
                values[p] = work[self.row_idx[p]] / ljj;
            }
        }
        Ok(())
    }
}

/// Numeric Cholesky factor together with its (shared) symbolic analysis.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    symbolic: Arc<SymbolicCholesky>,
    values: Vec<f64>,
}

impl PartialEq for CholeskyFactor {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.symbolic, &other.symbolic) && self.values == other.values
    }
}

/// Factorizes with a fresh minimum-degree analysis.
pub fn factorize(q: &SparseSymMatrix) -> Result<CholeskyFactor> {
    CholeskyFactor::new(q, Ordering::default())
}

impl CholeskyFactor {
    pub fn new(q: &SparseSymMatrix, ordering: Ordering) -> Result<Self> {
        let symbolic = Arc::new(SymbolicCholesky::analyze(q.pattern(), ordering));
        Self::with_symbolic(symbolic, q)
    }

    /// Numeric factorization reusing an existing analysis.
    pub fn with_symbolic(symbolic: Arc<SymbolicCholesky>, q: &SparseSymMatrix) -> Result<Self> {
        if !symbolic.accepts(q) {
            return Err(Error::PatternMismatch);
        }
        let mut values = vec![0.0; symbolic.nnz()];
        symbolic.factor_columns(q.values(), &mut values, 0..symbolic.n)?;
        Ok(CholeskyFactor { symbolic, values })
    }

    /// Full numeric refactorization of a matrix with the same pattern.
    pub fn refactorize(&self, q: &SparseSymMatrix) -> Result<Self> {
        Self::with_symbolic(self.symbolic.clone(), q)
    }

    /// Refactorizes `q_new`, which may differ from the factored matrix only in
    /// rows/columns listed in `changed_nodes` (original indices). Columns
    /// outside the ancestor closure of the changed ones are copied.
    pub fn refactorize_partial(
        &self,
        q_new: &SparseSymMatrix,
        changed_nodes: &[usize],
    ) -> Result<Self> {
        if !self.symbolic.accepts(q_new) {
            return Err(Error::PatternMismatch);
        }
        let mut out = self.clone();
        if changed_nodes.is_empty() {
            return Ok(out);
        }
        for &node in changed_nodes {
            if node >= self.symbolic.n {
                return Err(Error::AreaOutOfRange {
                    index: node,
                    n_areas: self.symbolic.n,
                });
            }
        }
        let cols = self.symbolic.affected_columns(changed_nodes);
        self.symbolic
            .factor_columns(q_new.values(), &mut out.values, cols.into_iter())?;
        Ok(out)
    }

    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.symbolic
    }

    pub fn dim(&self) -> usize {
        self.symbolic.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Diagonal entry `L[j, j]` in permuted order.
    pub fn diag(&self, j: usize) -> f64 {
        self.values[self.symbolic.col_ptr[j]]
    }

    /// `log|Q| = 2 Σ log L_jj`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.symbolic.n).map(|j| self.diag(j).ln()).sum::<f64>()
    }

    /// Solves `Q x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let s = &self.symbolic;
        let mut y: Vec<f64> = s.perm.iter().map(|&old| b[old]).collect();
        for j in 0..s.n {
            let c0 = s.col_ptr[j];
            y[j] /= self.values[c0];
            let yj = y[j];
            for p in c0 + 1..s.col_ptr[j + 1] {
                y[s.row_idx[p]] -= self.values[p] * yj;
            }
        }
        let z = self.back_substitute(y);
        let mut x = vec![0.0; s.n];
        for (j, &old) in s.perm.iter().enumerate() {
            x[old] = z[j];
        }
        x
    }

    /// Maps white noise `z` to a draw with covariance `Q⁻¹` (solves `Lᵀ y = z`
    /// and undoes the permutation).
    pub fn sample_from_noise(&self, z: &[f64]) -> Vec<f64> {
        let y = self.back_substitute(z.to_vec());
        let mut x = vec![0.0; self.symbolic.n];
        for (j, &old) in self.symbolic.perm.iter().enumerate() {
            x[old] = y[j];
        }
        x
    }

    fn back_substitute(&self, mut y: Vec<f64>) -> Vec<f64> {
        let s = &self.symbolic;
        for j in (0..s.n).rev() {
            let c0 = s.col_ptr[j];
            let mut acc = y[j];
            for p in c0 + 1..s.col_ptr[j + 1] {
                acc -= self.values[p] * y[s.row_idx[p]];
            }
            y[j] = acc / self.values[c0];
        }
        y
    }

    /// Dense `L` (permuted coordinates), row-major.
    pub fn to_dense_l(&self) -> Vec<Vec<f64>> {
        let s = &self.symbolic;
        let mut l = vec![vec![0.0; s.n]; s.n];
        for j in 0..s.n {
            for p in s.col_ptr[j]..s.col_ptr[j + 1] {
                l[s.row_idx[p]][j] = self.values[p];
            }
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AreaGraph;
    use crate::precision::sparse::PrecisionBuilder;

    #[test]
    fn identity_factor() {
        let q = SparseSymMatrix::identity(4);
        let f = factorize(&q).unwrap();
        assert_eq!(f.to_dense_l(), SparseSymMatrix::identity(4).to_dense());
        assert_eq!(f.log_det(), 0.0);
    }

    #[test]
    fn diagonal_factor() {
        let q = SparseSymMatrix::from_triplets(2, &[(0, 0, 4.0), (1, 1, 9.0)]).unwrap();
        let f = CholeskyFactor::new(&q, Ordering::Natural).unwrap();
        assert_eq!(f.to_dense_l(), vec![vec![2.0, 0.0], vec![0.0, 3.0]]);
        assert!((f.log_det() - 36f64.ln()).abs() < 1e-14);
        assert!((f.log_det() - 3.5835).abs() < 1e-4);
    }

    #[test]
    fn not_positive_definite_reports_pivot() {
        let q =
            SparseSymMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 2.0)]).unwrap();
        match CholeskyFactor::new(&q, Ordering::Natural) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected failure, got {other:?}"),
        }
        let singular = PrecisionBuilder::for_graph(&AreaGraph::lattice(2, 3).unwrap())
            .leroux(1.0, 0.0)
            .unwrap();
        assert!(matches!(
            factorize(&singular),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn solve_and_sample_agree_with_matrix() {
        let g = AreaGraph::lattice(4, 5).unwrap();
        let b = PrecisionBuilder::for_graph(&g);
        let w: Vec<f64> = (0..b.n_edges())
            .map(|e| 0.2 + 0.6 * ((e * 7) % 11) as f64 / 11.0)
            .collect();
        let q = b.adaptive(&w, 0.05).unwrap();
        let f = factorize(&q).unwrap();
        let rhs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = f.solve(&rhs);
        let back = q.mul_vec(&x);
        for (a, c) in back.iter().zip(&rhs) {
            assert!((a - c).abs() < 1e-9);
        }
        // xᵀ Q x = zᵀ z for x = sample_from_noise(z)
        let x = f.sample_from_noise(&rhs);
        let zz: f64 = rhs.iter().map(|v| v * v).sum();
        assert!((q.quad_form(&x) - zz).abs() < 1e-9 * zz);
    }

    #[test]
    fn partial_with_no_changes_is_bitwise_copy() {
        let g = AreaGraph::lattice(5, 5).unwrap();
        let b = PrecisionBuilder::for_graph(&g);
        let q = b.adaptive(&vec![0.7; b.n_edges()], 1e-7).unwrap();
        let f = factorize(&q).unwrap();
        let g2 = f.refactorize_partial(&q, &[]).unwrap();
        assert_eq!(f, g2);
    }

    #[test]
    fn partial_rejects_other_pattern() {
        let q = PrecisionBuilder::for_graph(&AreaGraph::lattice(3, 3).unwrap())
            .leroux(0.5, 0.0)
            .unwrap();
        let f = factorize(&q).unwrap();
        let other = PrecisionBuilder::for_graph(&AreaGraph::lattice(1, 9).unwrap())
            .leroux(0.5, 0.0)
            .unwrap();
        assert!(matches!(
            f.refactorize_partial(&other, &[0]),
            Err(Error::PatternMismatch)
        ));
        assert!(matches!(f.refactorize(&other), Err(Error::PatternMismatch)));
    }
}
