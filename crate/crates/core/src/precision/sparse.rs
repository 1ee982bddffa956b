use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{AreaGraph, EdgeSet};

/// Structure of a symmetric matrix: both triangles plus the full diagonal,
/// stored row-wise with sorted column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    diag_pos: Vec<usize>,
}

impl SymPattern {
    /// Pattern with the diagonal and the given neighbour lists (which must be
    /// symmetric, sorted and loop-free).
    pub fn from_neighbors(neighbors: &[Vec<usize>]) -> Self {
        let n = neighbors.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut diag_pos = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, nb) in neighbors.iter().enumerate() {
            let mut placed = false;
            for &k in nb {
                if !placed && k > i {
                    diag_pos.push(col_idx.len());
                    col_idx.push(i);
                    placed = true;
                }
                col_idx.push(k);
            }
            if !placed {
                diag_pos.push(col_idx.len());
                col_idx.push(i);
            }
            row_ptr.push(col_idx.len());
        }
        SymPattern {
            n,
            row_ptr,
            col_idx,
            diag_pos,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices of row `i`, including the diagonal.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn diag_pos(&self, i: usize) -> usize {
        self.diag_pos[i]
    }

    /// Storage position of entry `(i, k)`, if structurally present.
    pub fn position(&self, i: usize, k: usize) -> Option<usize> {
        let r = self.row_range(i);
        self.col_idx[r.clone()]
            .binary_search(&k)
            .ok()
            .map(|p| r.start + p)
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }
}

/// Sparse symmetric matrix sharing an immutable pattern.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    pattern: Arc<SymPattern>,
    values: Vec<f64>,
}

impl PartialEq for SparseSymMatrix {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern)
            && self.values == other.values
    }
}

impl SparseSymMatrix {
    pub fn new(pattern: Arc<SymPattern>, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::Dimension(format!(
                "{} values for a pattern with {} entries",
                values.len(),
                pattern.nnz()
            )));
        }
        let m = SparseSymMatrix { pattern, values };
        for i in 0..m.dim() {
            for p in m.pattern.row_range(i) {
                let k = m.pattern.col_idx[p];
                if k > i {
                    let q = m.pattern.position(k, i).ok_or(Error::PatternMismatch)?;
                    if m.values[p] != m.values[q] {
                        return Err(Error::domain(
                            "matrix",
                            format!("not symmetric at ({i}, {k})"),
                        ));
                    }
                }
            }
        }
        Ok(m)
    }

    /// Builds from `(i, k, value)` triplets; each off-diagonal triplet sets
    /// both `(i, k)` and `(k, i)`, duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sets = vec![std::collections::BTreeSet::new(); n];
        for &(i, k, _) in triplets {
            if i >= n || k >= n {
                return Err(Error::Dimension(format!(
                    "triplet ({i}, {k}) outside {n}x{n}"
                )));
            }
            if i != k {
                sets[i].insert(k);
                sets[k].insert(i);
            }
        }
        let nb: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let pattern = Arc::new(SymPattern::from_neighbors(&nb));
        let mut values = vec![0.0; pattern.nnz()];
        for &(i, k, v) in triplets {
            let p = pattern.position(i, k).expect("entry in pattern");
            values[p] += v;
            if i != k {
                let q = pattern.position(k, i).expect("entry in pattern");
                values[q] += v;
            }
        }
        Ok(SparseSymMatrix { pattern, values })
    }

    pub fn identity(n: usize) -> Self {
        let pattern = Arc::new(SymPattern::from_neighbors(&vec![Vec::new(); n]));
        SparseSymMatrix {
            pattern,
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn pattern(&self) -> &Arc<SymPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.pattern.position(i, k).map_or(0.0, |p| self.values[p])
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.values[self.pattern.diag_pos[i]]
    }

    /// `(column, value)` pairs of row `i`, diagonal included.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.pattern.row_range(i);
        self.pattern.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// `(Q x)_i`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.pattern.row_range(i);
        let mut s = 0.0;
        for p in r {
            s += self.values[p] * x[self.pattern.col_idx[p]];
        }
        s
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row_dot(i, x)).collect()
    }

    /// `xᵀ Q y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.dim()).map(|i| x[i] * self.row_dot(i, y)).sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for (k, v) in self.row(i) {
                row[k] = v;
            }
        }
        m
    }

    /// Matrix Market coordinate text (`symmetric`, lower triangle, 1-based).
    pub fn to_matrix_market(&self) -> String {
        let n = self.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for (k, v) in self.row(i) {
                if k <= i {
                    entries.push((i, k, v));
                }
            }
        }
        let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(out, "{n} {n} {}", entries.len());
        for (i, k, v) in entries {
            let _ = writeln!(out, "{} {} {v}", i + 1, k + 1);
        }
        out
    }
}

/// Fixed-pattern builder for graph precision matrices.
///
/// Holds the shared pattern and, for every edge, the storage slots of its two
/// off-diagonal entries so weights can be rewritten in place.
#[derive(Debug, Clone)]
pub struct PrecisionBuilder {
    pattern: Arc<SymPattern>,
    edges: Vec<(usize, usize)>,
    edge_slots: Vec<(usize, usize)>,
}

impl PrecisionBuilder {
    pub fn from_neighbors(neighbors: &[Vec<usize>]) -> Self {
        let pattern = Arc::new(SymPattern::from_neighbors(neighbors));
        let mut edges = Vec::new();
        let mut edge_slots = Vec::new();
        for (i, nb) in neighbors.iter().enumerate() {
            for &k in nb {
                if i < k {
                    edges.push((i, k));
                    edge_slots.push((
                        pattern.position(i, k).unwrap(),
                        pattern.position(k, i).unwrap(),
                    ));
                }
            }
        }
        PrecisionBuilder {
            pattern,
            edges,
            edge_slots,
        }
    }

    pub fn for_graph(g: &AreaGraph) -> Self {
        Self::from_neighbors(g.adjacency_lists())
    }

    pub fn pattern(&self) -> &Arc<SymPattern> {
        &self.pattern
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `diag(W1) − W + εI` with `W` carrying the given edge weights.
    pub fn adaptive(&self, weights: &[f64], eps: f64) -> Result<SparseSymMatrix> {
        check_eps(eps)?;
        if weights.len() != self.edges.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} edges",
                weights.len(),
                self.edges.len()
            )));
        }
        for (e, &w) in weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::domain(
                    "edge weight",
                    format!("weight {w} on edge {e} outside [0, 1]"),
                ));
            }
        }
        let mut values = vec![0.0; self.pattern.nnz()];
        let mut diag = vec![eps; self.pattern.n];
        for (e, &(i, k)) in self.edges.iter().enumerate() {
            let (a, b) = self.edge_slots[e];
            values[a] = -weights[e];
            values[b] = -weights[e];
            diag[i] += weights[e];
            diag[k] += weights[e];
        }
        for (i, d) in diag.into_iter().enumerate() {
            values[self.pattern.diag_pos[i]] = d;
        }
        Ok(SparseSymMatrix {
            pattern: self.pattern.clone(),
            values,
        })
    }

    /// Rewrites the weights of `changed` edges in a matrix built by
    /// [`Self::adaptive`] and recomputes the affected diagonals, so the result
    /// is bitwise equal to a fresh build.
    pub fn update_edges(
        &self,
        q: &mut SparseSymMatrix,
        changed: &[usize],
        weights: &[f64],
        eps: f64,
    ) -> Result<()> {
        if !Arc::ptr_eq(&q.pattern, &self.pattern) && *q.pattern != *self.pattern {
            return Err(Error::PatternMismatch);
        }
        if weights.len() != self.edges.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} edges",
                weights.len(),
                self.edges.len()
            )));
        }
        for &e in changed {
            let w = weights[e];
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::domain(
                    "edge weight",
                    format!("weight {w} on edge {e} outside [0, 1]"),
                ));
            }
            let (a, b) = self.edge_slots[e];
            q.values[a] = -w;
            q.values[b] = -w;
        }
        for &e in changed {
            let (i, k) = self.edges[e];
            for node in [i, k] {
                let mut d = eps;
                for p in self.pattern.row_range(node) {
                    if self.pattern.col_idx[p] != node {
                        d += -q.values[p];
                    }
                }
                q.values[self.pattern.diag_pos[node]] = d;
            }
        }
        Ok(())
    }

    /// `ρ[diag(W1) − W] + (1 − ρ + ε)I` with unit weights.
    pub fn leroux(&self, rho: f64, eps: f64) -> Result<SparseSymMatrix> {
        check_rho(rho)?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::domain(
                "epsilon",
                format!("{eps} must be a finite non-negative number"),
            ));
        }
        let mut values = vec![0.0; self.pattern.nnz()];
        let mut degree = vec![0usize; self.pattern.n];
        for (e, &(i, k)) in self.edges.iter().enumerate() {
            let (a, b) = self.edge_slots[e];
            values[a] = -rho;
            values[b] = -rho;
            degree[i] += 1;
            degree[k] += 1;
        }
        for (i, d) in degree.into_iter().enumerate() {
            values[self.pattern.diag_pos[i]] = rho * d as f64 + (1.0 - rho) + eps;
        }
        Ok(SparseSymMatrix {
            pattern: self.pattern.clone(),
            values,
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "epsilon",
            format!("{eps} must be a finite positive number"),
        ))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::domain("rho", format!("{rho} outside [0, 1]")))
    }
}

/// `Q(W, ε) = diag(W1) − W + εI` for edge weights in canonical edge order.
pub fn build_adaptive_q(
    g: &AreaGraph,
    es: &EdgeSet,
    weights: &[f64],
    eps: f64,
) -> Result<SparseSymMatrix> {
    if es.n_areas() != g.n_areas() {
        return Err(Error::Dimension(
            "edge set built from a different graph".into(),
        ));
    }
    PrecisionBuilder::for_graph(g).adaptive(weights, eps)
}

/// Leroux precision `ρ[diag(W1) − W] + (1 − ρ)I`. Singular at `ρ = 1`.
pub fn build_leroux_q(g: &AreaGraph, rho: f64) -> Result<SparseSymMatrix> {
    PrecisionBuilder::for_graph(g).leroux(rho, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> (AreaGraph, EdgeSet) {
        let g = AreaGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let es = EdgeSet::from_graph(&g);
        (g, es)
    }

    #[test]
    fn adaptive_path_unit_weights() {
        let (g, es) = path3();
        let q = build_adaptive_q(&g, &es, &[1.0, 1.0], 0.1).unwrap();
        let d = q.to_dense();
        assert!((d[0][0] - 1.1).abs() < 1e-15);
        assert!((d[1][1] - 2.1).abs() < 1e-15);
        assert!((d[2][2] - 1.1).abs() < 1e-15);
        assert_eq!(d[0][1], -1.0);
        assert_eq!(d[1][2], -1.0);
        assert_eq!(d[0][2], 0.0);
    }

    #[test]
    fn vanishing_weights_leave_ridge() {
        let g = AreaGraph::lattice(3, 3).unwrap();
        let es = EdgeSet::from_graph(&g);
        let q = build_adaptive_q(&g, &es, &vec![1e-300; es.len()], 0.25).unwrap();
        let d = q.to_dense();
        for i in 0..9 {
            for k in 0..9 {
                let expect = if i == k { 0.25 } else { 0.0 };
                assert!((d[i][k] - expect).abs() < 1e-290);
            }
        }
    }

    #[test]
    fn adaptive_row_sums_equal_ridge() {
        let g = AreaGraph::lattice(2, 2).unwrap();
        let es = EdgeSet::from_graph(&g);
        let eps = 1e-7;
        let q = build_adaptive_q(&g, &es, &[1.0, 0.5, 0.5, 1.0], eps).unwrap();
        // dense construction oracle
        let mut dense = vec![vec![0.0; 4]; 4];
        for (i, row) in dense.iter_mut().enumerate() {
            row[i] = eps;
        }
        for (e, &(i, k)) in es.edges().iter().enumerate() {
            let w = [1.0, 0.5, 0.5, 1.0][e];
            dense[i][k] -= w;
            dense[k][i] -= w;
            dense[i][i] += w;
            dense[k][k] += w;
        }
        assert_eq!(q.to_dense(), dense);
        for row in q.to_dense() {
            let s: f64 = row.iter().sum();
            assert!((s - eps).abs() <= 1e-12 * 2.0);
        }
    }

    #[test]
    fn adaptive_errors() {
        let (g, es) = path3();
        assert!(build_adaptive_q(&g, &es, &[1.0], 0.1).is_err());
        assert!(build_adaptive_q(&g, &es, &[1.5, 0.2], 0.1).is_err());
        assert!(build_adaptive_q(&g, &es, &[-0.1, 0.2], 0.1).is_err());
        assert!(build_adaptive_q(&g, &es, &[0.5, 0.2], 0.0).is_err());
        assert!(build_adaptive_q(&g, &es, &[f64::NAN, 0.2], 0.1).is_err());
    }

    #[test]
    fn leroux_examples() {
        let (g, _) = path3();
        let q = build_leroux_q(&g, 0.0).unwrap();
        assert_eq!(
            q.to_dense(),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
        let q = build_leroux_q(&g, 1.0).unwrap();
        assert_eq!(
            q.to_dense(),
            vec![
                vec![1.0, -1.0, 0.0],
                vec![-1.0, 2.0, -1.0],
                vec![0.0, -1.0, 1.0]
            ]
        );
        let g2 = AreaGraph::from_pairs(2, &[(0, 1)]).unwrap();
        let q = build_leroux_q(&g2, 0.5).unwrap();
        assert_eq!(q.to_dense(), vec![vec![1.0, -0.5], vec![-0.5, 1.0]]);
        assert!(build_leroux_q(&g2, 1.01).is_err());
        assert!(build_leroux_q(&g2, -0.01).is_err());
    }

    #[test]
    fn in_place_edge_update_matches_rebuild() {
        let g = AreaGraph::lattice(3, 4).unwrap();
        let b = PrecisionBuilder::for_graph(&g);
        let mut w: Vec<f64> = (0..b.n_edges())
            .map(|e| 0.1 + 0.05 * e as f64 % 0.9)
            .collect();
        let mut q = b.adaptive(&w, 1e-3).unwrap();
        w[2] = 0.77;
        w[7] = 0.01;
        b.update_edges(&mut q, &[2, 7], &w, 1e-3).unwrap();
        let fresh = b.adaptive(&w, 1e-3).unwrap();
        assert_eq!(q.values(), fresh.values());
    }

    #[test]
    fn triplets_and_quadratic_forms() {
        let q = SparseSymMatrix::from_triplets(
            3,
            &[(0, 0, 2.0), (1, 1, 3.0), (2, 2, 4.0), (0, 2, -1.0)],
        )
        .unwrap();
        let x = [1.0, 2.0, 3.0];
        // 2 + 12 + 36 - 2*3 = 44
        assert!((q.quad_form(&x) - 44.0).abs() < 1e-12);
        assert_eq!(q.get(2, 0), -1.0);
        assert_eq!(q.get(1, 0), 0.0);
        let mm = q.to_matrix_market();
        assert!(mm.starts_with("%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n"));
    }
}
